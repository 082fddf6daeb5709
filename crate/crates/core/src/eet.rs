//! Element equilibration: per-node projections of the edge tractions onto the
//! linear shape functions, followed by edge-wise traction recovery.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rayon::prelude::*;

use crate::equil::{cost_weight, fe_stress_projection, neumann_moments, node_load_scale, node_load_vectors, CostFunction, TractionField};
use crate::error::{Error, Result};
use crate::fem::FemSolution;
use crate::linalg::{solve_constrained_lsq, solve_dense};
use crate::mesh::Mesh;

/// Relative tolerance on the compatibility of closed node systems.
pub const COMPATIBILITY_TOL: f64 = 1e-8;

/// Projection system of one node.
///
/// Unknowns are `b_hat[2 * k + c] = int_Gamma_k F_c phi_i` for the edges
/// `Gamma_k` of `edges`.
#[derive(Debug, Clone)]
pub struct NodeSystem {
    pub node: usize,
    pub edges: Vec<usize>,
    pub elements: Vec<usize>,
    /// Prolongation rows kept, as `(element, component)`.
    pub rows: Vec<(usize, usize)>,
    /// Prolongation matrix and right-hand side (rows as in `rows`).
    pub b: DMatrix<f64>,
    pub q: DVector<f64>,
    /// Rows imposing the prescribed traction, as `(edge position, component)`.
    pub neumann_rows: Vec<(usize, usize)>,
    pub c: DMatrix<f64>,
    pub q_neumann: DVector<f64>,
    /// Target projections of the finite element tractions.
    pub target: DVector<f64>,
    /// Block diagonal weight.
    pub weight: DMatrix<f64>,
    /// Components in which the element equations are linearly dependent.
    pub closed: [bool; 2],
    /// Dropped prolongation rows, `(element, component)`.
    pub dropped: Vec<(usize, usize)>,
}

impl NodeSystem {
    pub fn n_unknowns(&self) -> usize {
        2 * self.edges.len()
    }

    pub fn n_independent(&self) -> usize {
        self.rows.len()
    }

    pub fn n_enforced(&self) -> usize {
        self.neumann_rows.len()
    }

    /// `true` when the unknowns exceed the constraints and a minimisation is solved.
    pub fn minimisation(&self) -> bool {
        self.n_unknowns() > self.n_enforced() + self.n_independent()
    }

    /// All constraint rows stacked, Neumann rows first.
    pub fn constraints(&self) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.n_unknowns();
        let m = self.c.nrows() + self.b.nrows();
        let mut a = DMatrix::zeros(m, n);
        let mut r = DVector::zeros(m);
        a.view_mut((0, 0), (self.c.nrows(), n)).copy_from(&self.c);
        a.view_mut((self.c.nrows(), 0), (self.b.nrows(), n)).copy_from(&self.b);
        r.rows_mut(0, self.c.nrows()).copy_from(&self.q_neumann);
        r.rows_mut(self.c.nrows(), self.b.nrows()).copy_from(&self.q);
        (a, r)
    }
}

/// `int_Gamma (P_lo phi_lo + P_hi phi_hi) phi_i` with `i` the end point at position `k`.
fn edge_moment(len: f64, nodal: &[Vector2<f64>; 2], k: usize) -> Vector2<f64> {
    (nodal[k] * 2.0 + nodal[1 - k]) * (len / 6.0)
}

pub fn build_node_system(mesh: &Mesh, solution: &FemSolution, node: usize, cost: CostFunction) -> Result<NodeSystem> {
    let edges = mesh.node_edges(node).to_vec();
    let loads = node_load_vectors(mesh, solution, node);
    let elements: Vec<usize> = loads.iter().map(|(e, _)| *e).collect();
    let n = 2 * edges.len();

    let mut closed = [true; 2];
    let mut neumann_rows = Vec::new();
    let mut neumann_values = Vec::new();
    let mut target = DVector::zeros(n);
    let mut weight = DMatrix::zeros(n, n);
    for (k, &edge) in edges.iter().enumerate() {
        let pos = mesh.edge(edge).iter().position(|&v| v == node).expect("edge contains node");
        let proj = fe_stress_projection(mesh, solution, edge);
        let t = edge_moment(mesh.edge_length(edge), &proj, pos);
        target.rows_mut(2 * k, 2).copy_from(&t);
        let w = cost_weight(cost, mesh, &solution.material, edge);
        weight.view_mut((2 * k, 2 * k), (2, 2)).copy_from(&w);
        if let Some(bc) = mesh.boundary_condition(edge) {
            let fd = neumann_moments(mesh, &solution.loads, edge)[pos];
            for c in 0..2 {
                if bc.is_neumann(c) {
                    neumann_rows.push((k, c));
                    neumann_values.push(fd[c]);
                } else {
                    closed[c] = false;
                }
            }
        }
    }

    // compatibility of closed components
    let scale = node_load_scale(mesh, solution, node) + neumann_values.iter().map(|v| v.abs()).sum::<f64>();
    for c in 0..2 {
        if closed[c] {
            let sum_q: f64 = loads.iter().map(|(_, q)| q[c]).sum();
            let sum_f: f64 = neumann_rows.iter().zip(&neumann_values).filter(|((_, cc), _)| *cc == c).map(|(_, v)| v).sum();
            let residual = (sum_q - sum_f).abs();
            if residual > COMPATIBILITY_TOL * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::Compatibility { node, residual, scale });
            }
        }
    }

    let last = *elements.iter().max().expect("node has elements");
    let mut rows: Vec<(usize, usize)> = Vec::new();
    let mut dropped = Vec::new();
    for &e in &elements {
        for (c, &is_closed) in closed.iter().enumerate() {
            if is_closed && e == last {
                dropped.push((e, c));
            } else {
                rows.push((e, c));
            }
        }
    }
    // square or overdetermined: keep the Neumann rows and truncate prolongation
    // rows, highest element index first
    let capacity = n.saturating_sub(neumann_rows.len());
    if rows.len() > capacity {
        rows.sort_by_key(|&(e, c)| (e, c));
        let extra = rows.split_off(capacity);
        dropped.extend(extra);
    }

    let mut b = DMatrix::zeros(rows.len(), n);
    let mut q = DVector::zeros(rows.len());
    for (r, &(e, c)) in rows.iter().enumerate() {
        for (k, &edge) in edges.iter().enumerate() {
            if mesh.local_edge(e, edge).is_some() {
                b[(r, 2 * k + c)] = mesh.eta(edge, e);
            }
        }
        q[r] = loads.iter().find(|(x, _)| *x == e).expect("element of node").1[c];
    }
    let mut cm = DMatrix::zeros(neumann_rows.len(), n);
    for (r, &(k, c)) in neumann_rows.iter().enumerate() {
        cm[(r, 2 * k + c)] = 1.0;
    }
    Ok(NodeSystem {
        node,
        edges,
        elements,
        rows,
        b,
        q,
        neumann_rows,
        c: cm,
        q_neumann: DVector::from_vec(neumann_values),
        target,
        weight,
        closed,
        dropped,
    })
}

/// Projections `b_hat` of one node, ordered as `system.edges` (two components each).
pub fn solve_node_system(system: &NodeSystem) -> Result<DVector<f64>> {
    let (a, r) = system.constraints();
    let context = format!("node {} projection system", system.node);
    if system.minimisation() {
        Ok(solve_constrained_lsq(&system.weight, &system.target, &a, &r, &context)?.x)
    } else {
        solve_dense(a, r, &context)
    }
}

/// Solved projections of every node.
#[derive(Debug, Clone)]
pub struct NodeProjections {
    pub systems: Vec<NodeSystem>,
    pub values: Vec<DVector<f64>>,
}

pub fn solve_all_nodes(mesh: &Mesh, solution: &FemSolution, cost: CostFunction) -> Result<NodeProjections> {
    let solved: Result<Vec<_>> = (0..mesh.num_nodes())
        .into_par_iter()
        .map(|i| {
            let s = build_node_system(mesh, solution, i, cost)?;
            let v = solve_node_system(&s)?;
            Ok((s, v))
        })
        .collect();
    let (systems, values) = solved?.into_iter().unzip();
    Ok(NodeProjections { systems, values })
}

/// Rebuilds the linear edge tractions from the nodal projections by inverting
/// the edge mass matrix `(l/6) [[2, 1], [1, 2]]`.
pub fn recover_tractions(mesh: &Mesh, projections: &NodeProjections) -> TractionField {
    let nodal = (0..mesh.num_edges())
        .into_par_iter()
        .map(|edge| {
            let ends = mesh.edge(edge);
            let b: [Vector2<f64>; 2] = std::array::from_fn(|k| {
                let sys = &projections.systems[ends[k]];
                let pos = sys.edges.iter().position(|&x| x == edge).expect("edge of node");
                projections.values[ends[k]].fixed_rows::<2>(2 * pos).into_owned()
            });
            let l = mesh.edge_length(edge);
            let inv = Matrix2::new(2.0, -1.0, -1.0, 2.0) * (2.0 / l);
            let lo = b[0] * inv[(0, 0)] + b[1] * inv[(0, 1)];
            let hi = b[0] * inv[(1, 0)] + b[1] * inv[(1, 1)];
            [lo, hi]
        })
        .collect();
    TractionField { nodal }
}

/// Full traction construction.
pub fn eet_tractions(mesh: &Mesh, solution: &FemSolution, cost: CostFunction) -> Result<TractionField> {
    let p = solve_all_nodes(mesh, solution, cost)?;
    Ok(recover_tractions(mesh, &p))
}
