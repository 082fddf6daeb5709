//! Local Neumann problems on single elements, discretised with Lagrange
//! elements of degree `p + k` and loaded by the equilibrated edge tractions.

use nalgebra::{DMatrix, DVector, Vector2};
use rayon::prelude::*;

use crate::basis::TriangleBasis;
use crate::equil::TractionField;
use crate::error::{Error, Result};
use crate::fem::{FemSolution, LoadCase, Material, Stress};
use crate::geometry::TriangleGeometry;
use crate::linalg::solve_saddle;
use crate::mesh::Mesh;
use crate::quadrature::{edge_rule, triangle_rule, QuadratureRule};

/// Relative load imbalance above which an element problem is refused.
pub const BALANCE_TOL: f64 = 1e-8;

/// How the three rigid-body modes of a floating element are removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pinning {
    /// Zero mean displacement and zero mean rotation.
    #[default]
    MeanValue,
    /// L2-orthogonality to the rigid-body modes.
    L2Rigid,
}

/// Polynomial stress field `base + K eps(w_E)` per element, with `w_E` a
/// Lagrange displacement of degree `degree`.
#[derive(Debug, Clone)]
pub struct AdmissibleStress {
    pub material: Material,
    pub basis: TriangleBasis,
    /// Constant part per element.
    pub base: Vec<Stress>,
    /// Interleaved `(x, y)` coefficients per basis function.
    pub correction: Vec<DVector<f64>>,
}

impl AdmissibleStress {
    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    /// Stress at barycentric point `l` of element `e`.
    pub fn stress(&self, mesh: &Mesh, e: usize, l: [f64; 3]) -> Stress {
        self.base[e] + self.material.stiffness() * self.correction_strain(mesh, e, l)
    }

    /// Strain of the correction displacement at `l`.
    pub fn correction_strain(&self, mesh: &Mesh, e: usize, l: [f64; 3]) -> Stress {
        let g = TriangleGeometry::of(mesh, e);
        let n = self.basis.len();
        let mut v = vec![0.0; n];
        let mut d = vec![[0.0; 3]; n];
        self.basis.eval_barycentric(l, &mut v, &mut d);
        let w = &self.correction[e];
        let mut eps = Stress::zeros();
        for j in 0..n {
            let gr = g.gradient(&d[j]);
            let (ux, uy) = (w[2 * j], w[2 * j + 1]);
            eps += Stress::new(gr.x * ux, gr.y * uy, gr.y * ux + gr.x * uy);
        }
        eps
    }
}

/// Basis tables on the reference element shared by all element solves.
struct Tables {
    basis: TriangleBasis,
    interior: &'static QuadratureRule,
    edge: &'static QuadratureRule,
    values: Vec<Vec<f64>>,
    derivs: Vec<Vec<[f64; 3]>>,
    edge_values: [Vec<Vec<f64>>; 3],
}

impl Tables {
    fn new(degree: usize) -> Result<Self> {
        let basis = TriangleBasis::lagrange(degree)?;
        let interior = triangle_rule(2 * degree)?;
        let edge = edge_rule(2 * degree)?;
        let n = basis.len();
        let mut values = Vec::new();
        let mut derivs = Vec::new();
        for (l, _) in interior.barycentric() {
            let mut v = vec![0.0; n];
            let mut d = vec![[0.0; 3]; n];
            basis.eval_barycentric(l, &mut v, &mut d);
            values.push(v);
            derivs.push(d);
        }
        let edge_values = std::array::from_fn(|k| {
            edge.iter()
                .map(|(p, _)| {
                    let mut v = vec![0.0; n];
                    let mut d = vec![[0.0; 3]; n];
                    basis.eval_barycentric(TriangleGeometry::edge_point(k, p[0]), &mut v, &mut d);
                    v
                })
                .collect()
        });
        Ok(Self { basis, interior, edge, values, derivs, edge_values })
    }
}

/// Assembled local problem of one element.
#[derive(Debug, Clone)]
pub struct ElementProblem {
    pub stiffness: DMatrix<f64>,
    pub load: DVector<f64>,
    /// Interpolants of the rigid modes `(1, 0)`, `(0, 1)` and the rotation about the centroid.
    pub rigid: [DVector<f64>; 3],
    pub mean_constraints: DMatrix<f64>,
    pub l2_constraints: DMatrix<f64>,
}

fn assemble(
    tables: &Tables,
    mesh: &Mesh,
    e: usize,
    tractions: &TractionField,
    loads: &LoadCase,
    material: &Material,
) -> ElementProblem {
    let g = TriangleGeometry::of(mesh, e);
    let d = material.stiffness();
    let n = tables.basis.len();
    let mut k = DMatrix::zeros(2 * n, 2 * n);
    let mut f = DVector::zeros(2 * n);
    let mut mean = DMatrix::zeros(3, 2 * n);
    let mut l2 = DMatrix::zeros(3, 2 * n);
    let c = g.centroid();
    let mut bmat = DMatrix::zeros(3, 2 * n);
    for (q, (l, w)) in tables.interior.barycentric().enumerate() {
        let wj = w * g.jacobian();
        let x = g.point(l);
        for j in 0..n {
            let gr = g.gradient(&tables.derivs[q][j]);
            bmat[(0, 2 * j)] = gr.x;
            bmat[(1, 2 * j + 1)] = gr.y;
            bmat[(2, 2 * j)] = gr.y;
            bmat[(2, 2 * j + 1)] = gr.x;
            let v = tables.values[q][j] * wj;
            mean[(0, 2 * j)] += v;
            mean[(1, 2 * j + 1)] += v;
            mean[(2, 2 * j)] -= gr.y * wj;
            mean[(2, 2 * j + 1)] += gr.x * wj;
            l2[(0, 2 * j)] += v;
            l2[(1, 2 * j + 1)] += v;
            l2[(2, 2 * j)] -= (x.y - c.y) * v;
            l2[(2, 2 * j + 1)] += (x.x - c.x) * v;
        }
        let db = d * &bmat;
        k += bmat.transpose() * db * wj;
        if !loads.body_force.is_zero() {
            let fb = loads.body_force.eval(&x) * wj;
            for j in 0..n {
                f[2 * j] += fb.x * tables.values[q][j];
                f[2 * j + 1] += fb.y * tables.values[q][j];
            }
        }
    }
    for side in 0..3 {
        let len = g.edge_length(side);
        for (q, (p, w)) in tables.edge.iter().enumerate() {
            let t: Vector2<f64> = tractions.on_element(mesh, e, side, p[0]) * (w * len);
            for j in 0..n {
                let v = tables.edge_values[side][q][j];
                f[2 * j] += t.x * v;
                f[2 * j + 1] += t.y * v;
            }
        }
    }
    let nodes = tables.basis.lagrange_nodes();
    let rigid = std::array::from_fn(|m| {
        DVector::from_fn(2 * n, |r, _| {
            let x = g.point(nodes[r / 2]);
            match (m, r % 2) {
                (0, 0) | (1, 1) => 1.0,
                (2, 0) => -(x.y - c.y),
                (2, 1) => x.x - c.x,
                _ => 0.0,
            }
        })
    });
    ElementProblem { stiffness: k, load: f, rigid, mean_constraints: mean, l2_constraints: l2 }
}

impl ElementProblem {
    /// Largest relative work of the load on a rigid mode.
    pub fn imbalance(&self) -> f64 {
        self.rigid
            .iter()
            .map(|r| {
                let work = self.load.dot(r);
                let scale = self.load.lp_norm(1) * r.amax();
                if scale > 0.0 {
                    work.abs() / scale
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn solve(&self, e: usize, pinning: Pinning) -> Result<DVector<f64>> {
        let imbalance = self.imbalance();
        if imbalance > BALANCE_TOL {
            return Err(Error::UnbalancedElement { element: e, residual: imbalance, scale: 1.0 });
        }
        let c = match pinning {
            Pinning::MeanValue => &self.mean_constraints,
            Pinning::L2Rigid => &self.l2_constraints,
        };
        let n = self.load.len();
        let mut rhs = DVector::zeros(n + 3);
        rhs.rows_mut(0, n).copy_from(&self.load);
        let sol = solve_saddle(&self.stiffness, c, rhs, &format!("element {e} Neumann problem"))?;
        Ok(sol.rows(0, n).into_owned())
    }
}

/// Assembled local problem of element `e` at degree `1 + k`.
pub fn element_problem(
    mesh: &Mesh,
    e: usize,
    tractions: &TractionField,
    loads: &LoadCase,
    material: &Material,
    k: usize,
) -> Result<ElementProblem> {
    let tables = Tables::new(1 + k)?;
    Ok(assemble(&tables, mesh, e, tractions, loads, material))
}

/// Element displacement of degree `1 + k` loaded by `tractions` and the body force.
pub fn solve_element(
    mesh: &Mesh,
    e: usize,
    tractions: &TractionField,
    loads: &LoadCase,
    material: &Material,
    k: usize,
    pinning: Pinning,
) -> Result<DVector<f64>> {
    element_problem(mesh, e, tractions, loads, material, k)?.solve(e, pinning)
}

/// Solves every element problem and returns the admissible stress `K eps(w_E)`.
pub fn solve_elements(
    mesh: &Mesh,
    solution: &FemSolution,
    tractions: &TractionField,
    k: usize,
    pinning: Pinning,
) -> Result<AdmissibleStress> {
    let tables = Tables::new(1 + k)?;
    let correction: Result<Vec<_>> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| assemble(&tables, mesh, e, tractions, &solution.loads, &solution.material).solve(e, pinning))
        .collect();
    Ok(AdmissibleStress {
        material: solution.material,
        basis: tables.basis.clone(),
        base: vec![Stress::zeros(); mesh.num_elements()],
        correction: correction?,
    })
}
