//! Dense saddle-point solves for the local problems and the sparse Cholesky
//! wrapper used by the global solve.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Col, Side};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solution of an equality-constrained quadratic program.
#[derive(Debug, Clone)]
pub struct KktSolution {
    pub x: DVector<f64>,
    pub multipliers: DVector<f64>,
}

/// Minimises `1/2 (x - t)^T H (x - t)` subject to `C x = d` by factorising
///
/// ```text
/// [ H  C^T ] [ x ]   [ H t ]
/// [ C   0  ] [ y ] = [  d  ]
/// ```
///
/// `H` must be symmetric positive definite on the null space of `C`, and `C`
/// must have full row rank.
pub fn solve_constrained_lsq(
    h: &DMatrix<f64>,
    target: &DVector<f64>,
    c: &DMatrix<f64>,
    d: &DVector<f64>,
    context: &str,
) -> Result<KktSolution> {
    let n = h.nrows();
    let m = c.nrows();
    let mut rhs = DVector::zeros(n + m);
    rhs.rows_mut(0, n).copy_from(&(h * target));
    rhs.rows_mut(n, m).copy_from(d);
    let sol = solve_saddle(h, c, rhs, context)?;
    Ok(KktSolution { x: sol.rows(0, n).into_owned(), multipliers: sol.rows(n, m).into_owned() })
}

/// Solves `[[A, C^T], [C, 0]] z = rhs` with partial-pivoting LU.
pub fn solve_saddle(a: &DMatrix<f64>, c: &DMatrix<f64>, rhs: DVector<f64>, context: &str) -> Result<DVector<f64>> {
    let n = a.nrows();
    let m = c.nrows();
    let mut k = DMatrix::zeros(n + m, n + m);
    k.view_mut((0, 0), (n, n)).copy_from(a);
    k.view_mut((n, 0), (m, n)).copy_from(c);
    k.view_mut((0, n), (n, m)).copy_from(&c.transpose());
    solve_dense(k, rhs, context)
}

/// Dense LU solve of a square system after symmetric Ruiz equilibration, with a
/// pivot test on the equilibrated matrix.
pub fn solve_dense(mut k: DMatrix<f64>, mut rhs: DVector<f64>, context: &str) -> Result<DVector<f64>> {
    let n = k.nrows();
    let singular = || Error::SingularSystem { context: context.to_string() };
    let mut scale = DVector::from_element(n, 1.0);
    for _ in 0..4 {
        let mut r = DVector::zeros(n);
        for i in 0..n {
            let m = k.row(i).amax().max(k.column(i).amax());
            if m == 0.0 {
                return Err(singular());
            }
            r[i] = 1.0 / m.sqrt();
        }
        for j in 0..n {
            for i in 0..n {
                k[(i, j)] *= r[i] * r[j];
            }
        }
        scale.component_mul_assign(&r);
    }
    rhs.component_mul_assign(&scale);
    let lu = k.lu();
    let min_pivot = lu.u().diagonal().iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    if min_pivot.is_nan() || min_pivot <= 1e-12 {
        return Err(singular());
    }
    let y = lu.solve(&rhs).ok_or_else(singular)?;
    Ok(y.component_mul(&scale))
}

/// Orthonormal basis of the null space of `a`, from its singular value decomposition.
pub fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    if a.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    // pad so that the SVD exposes all right singular vectors
    let padded = if a.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let smax = svd.singular_values.max();
    let cols: Vec<_> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= rel_tol * smax.max(f64::MIN_POSITIVE))
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Numerical rank from singular values.
pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let s = a.clone().svd(false, false).singular_values;
    let smax = s.max();
    s.iter().filter(|v| **v > rel_tol * smax).count()
}

/// Symmetric positive definite sparse system assembled from triplets
/// (duplicates are summed).
pub fn solve_spd_sparse(n: usize, triplets: &[(usize, usize, f64)], rhs: &[f64]) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let entries: Vec<_> = triplets.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &entries)
        .map_err(|e| Error::SingularSystem { context: format!("sparse assembly: {e:?}") })?;
    let llt = mat
        .sp_cholesky(Side::Lower)
        .map_err(|_| Error::SingularSystem { context: "global stiffness (insufficient constraints?)".into() })?;
    let b = Col::from_fn(n, |i| rhs[i]);
    let x = llt.solve(&b);
    let out: Vec<f64> = (0..n).map(|i| x[i]).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem { context: "global stiffness".into() });
    }
    Ok(out)
}
