//! Hybrid element equilibration and star-patch technique for linear elements.
//!
//! For every vertex `i` the unknowns are the linear traces of
//! `lambda_i F^(i)` on the edges through `i`, stored as nodal values
//! `(at i, at the other end)`. They are tested against broken linear fields on
//! the patch and the Neumann data enters as a penalty in the cost function.

use nalgebra::{DMatrix, DVector, Vector2};
use rayon::prelude::*;

use crate::equil::{cost_weight, fe_stress_projection, node_load_scale, node_load_vectors, CostFunction, TractionField};
use crate::error::{Error, Result};
use crate::fem::FemSolution;
use crate::linalg::{null_space, solve_constrained_lsq};
use crate::mesh::Mesh;

/// Default penalty factor on prescribed traction components.
pub const DEFAULT_PENALTY: f64 = 1e5;

const RANK_TOL: f64 = 1e-10;
/// Smallest kernel entry, in an orthonormal kernel basis, that marks a test as removable.
const FIX_TOL: f64 = 1e-8;

/// Patch traction system of one vertex.
#[derive(Debug, Clone)]
pub struct PatchTractionSystem {
    pub vertex: usize,
    pub edges: Vec<usize>,
    pub elements: Vec<usize>,
    /// Test functions `(element, local vertex, component)` in lexicographic order.
    pub tests: Vec<(usize, usize, usize)>,
    /// Work of each unknown on each test function (unknowns by rows).
    pub a: DMatrix<f64>,
    /// Right-hand side per test function.
    pub r: DVector<f64>,
    /// Test functions dropped to remove the kernel of `a`.
    pub fixed: Vec<usize>,
    pub kernel_dim: usize,
    pub target: DVector<f64>,
    pub penalty: DMatrix<f64>,
    /// Unknowns carrying prescribed traction data.
    pub neumann: Vec<bool>,
}

/// Unknown index of edge position `k`, end `r` (0 at the vertex) and component `c`.
pub fn unknown(k: usize, r: usize, c: usize) -> usize {
    4 * k + 2 * r + c
}

/// Nodal values `(at i, at j)` of `lambda_i F^(i)` for an edge `(i, j)` on which
/// the projected traction has nodal values `p_i`, `p_j`.
///
/// They follow from `int lambda_i F^(i) lambda_j = 0` and
/// `lambda_i F^(i) + lambda_j F^(j) = projection`.
pub fn split_target(p_i: Vector2<f64>, p_j: Vector2<f64>) -> [Vector2<f64>; 2] {
    let a = (p_i * 4.0 + p_j * 2.0) / 3.0;
    [a, -a / 2.0]
}

impl PatchTractionSystem {
    pub fn n_unknowns(&self) -> usize {
        4 * self.edges.len()
    }

    pub fn retained(&self) -> Vec<usize> {
        (0..self.tests.len()).filter(|t| !self.fixed.contains(t)).collect()
    }

    /// Retained constraint rows `A~^T` and right-hand side.
    pub fn constraints(&self) -> (DMatrix<f64>, DVector<f64>) {
        let kept = self.retained();
        let c = DMatrix::from_fn(kept.len(), self.n_unknowns(), |row, u| self.a[(u, kept[row])]);
        let r = DVector::from_fn(kept.len(), |row, _| self.r[kept[row]]);
        (c, r)
    }
}

pub fn build_patch_system(
    mesh: &Mesh,
    solution: &FemSolution,
    vertex: usize,
    cost: CostFunction,
    penalty: f64,
) -> Result<PatchTractionSystem> {
    let edges = mesh.node_edges(vertex).to_vec();
    let loads = node_load_vectors(mesh, solution, vertex);
    let elements: Vec<usize> = loads.iter().map(|(e, _)| *e).collect();
    let nu = 4 * edges.len();

    let mut tests = Vec::new();
    for &e in &elements {
        for a in 0..3 {
            for c in 0..2 {
                tests.push((e, a, c));
            }
        }
    }
    let mut a = DMatrix::zeros(nu, tests.len());
    let mut r = DVector::zeros(tests.len());
    for (t, &(e, local, c)) in tests.iter().enumerate() {
        let node = mesh.triangle(e)[local];
        if node == vertex {
            r[t] = loads.iter().find(|(x, _)| *x == e).expect("patch element").1[c];
        }
        for (k, &edge) in edges.iter().enumerate() {
            if mesh.local_edge(e, edge).is_none() {
                continue;
            }
            let [p, q] = mesh.edge(edge);
            if node != p && node != q {
                continue;
            }
            let other = if p == vertex { q } else { p };
            let len = mesh.edge_length(edge);
            let eta = mesh.eta(edge, e);
            for (end, at) in [(0, vertex), (1, other)] {
                let m = if at == node { len / 3.0 } else { len / 6.0 };
                a[(unknown(k, end, c), t)] = eta * m;
            }
        }
    }

    // remove the kernel greedily in lexicographic order
    let mut kernel = null_space(&a, RANK_TOL);
    let kernel_dim = kernel.ncols();
    let scale = node_load_scale(mesh, solution, vertex).max(f64::MIN_POSITIVE);
    for col in 0..kernel_dim {
        let residual = r.dot(&kernel.column(col)).abs();
        if residual > 1e-8 * scale {
            return Err(Error::Compatibility { node: vertex, residual, scale });
        }
    }
    // dropping test t keeps the rank iff some kernel vector is nonzero at t;
    // the kernel then shrinks to the vectors vanishing at t
    let mut fixed = Vec::new();
    for t in 0..tests.len() {
        if kernel.ncols() == 0 {
            break;
        }
        let j = kernel.row(t).iamax_full().1;
        let pivot = kernel[(t, j)];
        if pivot.abs() <= FIX_TOL {
            continue;
        }
        let p = kernel.column(j).into_owned();
        for c in 0..kernel.ncols() {
            let f = kernel[(t, c)] / pivot;
            if c != j {
                kernel.column_mut(c).axpy(-f, &p, 1.0);
            }
        }
        kernel = kernel.remove_column(j);
        if kernel.ncols() > 0 {
            kernel = kernel.qr().q();
        }
        fixed.push(t);
    }

    let mut target = DVector::zeros(nu);
    let mut pen = DMatrix::zeros(nu, nu);
    let mut neumann = vec![false; nu];
    for (k, &edge) in edges.iter().enumerate() {
        let ends = mesh.edge(edge);
        let at_i = ends.iter().position(|&v| v == vertex).expect("edge of vertex");
        let proj = fe_stress_projection(mesh, solution, edge);
        let split = split_target(proj[at_i], proj[1 - at_i]);
        let w = cost_weight(cost, mesh, &solution.material, edge);
        let bc = mesh.boundary_condition(edge);
        let s: [f64; 2] = std::array::from_fn(|c| match bc {
            Some(bc) if bc.is_neumann(c) => penalty.sqrt(),
            _ => 1.0,
        });
        for end in 0..2 {
            for c in 0..2 {
                let u = unknown(k, end, c);
                target[u] = split[end][c];
                neumann[u] = bc.is_some_and(|bc| bc.is_neumann(c));
                for c2 in 0..2 {
                    pen[(u, unknown(k, end, c2))] = s[c] * w[(c, c2)] * s[c2];
                }
            }
        }
    }
    Ok(PatchTractionSystem { vertex, edges, elements, tests, a, r, fixed, kernel_dim, target, penalty: pen, neumann })
}

pub fn solve_patch_system(system: &PatchTractionSystem) -> Result<DVector<f64>> {
    let (c, r) = system.constraints();
    let context = format!("vertex {} traction system", system.vertex);
    Ok(solve_constrained_lsq(&system.penalty, &system.target, &c, &r, &context)?.x)
}

#[derive(Debug, Clone)]
pub struct PatchTractions {
    pub systems: Vec<PatchTractionSystem>,
    pub values: Vec<DVector<f64>>,
}

pub fn solve_all_patches(mesh: &Mesh, solution: &FemSolution, cost: CostFunction, penalty: f64) -> Result<PatchTractions> {
    let solved: Result<Vec<_>> = (0..mesh.num_nodes())
        .into_par_iter()
        .map(|i| {
            let s = build_patch_system(mesh, solution, i, cost, penalty)?;
            let v = solve_patch_system(&s)?;
            Ok((s, v))
        })
        .collect();
    let (systems, values) = solved?.into_iter().unzip();
    Ok(PatchTractions { systems, values })
}

/// `F = lambda_lo F^(lo) + lambda_hi F^(hi)` on every edge.
pub fn recover_tractions(mesh: &Mesh, patches: &PatchTractions) -> TractionField {
    let nodal = (0..mesh.num_edges())
        .map(|edge| {
            let ends = mesh.edge(edge);
            let mut out = [Vector2::zeros(); 2];
            for (k, &v) in ends.iter().enumerate() {
                let sys = &patches.systems[v];
                let pos = sys.edges.iter().position(|&x| x == edge).expect("edge of vertex");
                let vals = &patches.values[v];
                // contribution of vertex v at its own end and at the opposite end
                out[k] += Vector2::new(vals[unknown(pos, 0, 0)], vals[unknown(pos, 0, 1)]);
                out[1 - k] += Vector2::new(vals[unknown(pos, 1, 0)], vals[unknown(pos, 1, 1)]);
            }
            out
        })
        .collect();
    TractionField { nodal }
}

pub fn eespt_tractions(mesh: &Mesh, solution: &FemSolution, cost: CostFunction, penalty: f64) -> Result<TractionField> {
    let p = solve_all_patches(mesh, solution, cost, penalty)?;
    Ok(recover_tractions(mesh, &p))
}
