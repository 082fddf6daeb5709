//! Star-patch equilibration: local residual problems on vertex patches,
//! weighted by the partition of unity of the linear shape functions.
//!
//! The patch space is the continuous hierarchical space of degree `p + 3`.
//! Its vertex functions are kept as unknowns but their right-hand side is set
//! to zero, which removes the linear part of every test function.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Vector2};
use rayon::prelude::*;

use crate::basis::TriangleBasis;
use crate::element_solve::AdmissibleStress;
use crate::error::Result;
use crate::fem::{stress_dot, FemSolution, Stress};
use crate::geometry::TriangleGeometry;
use crate::linalg::{null_space, solve_dense, solve_saddle};
use crate::mesh::Mesh;
use crate::quadrature::{edge_rule, triangle_rule};

/// Polynomial degree of the patch space for linear finite elements.
pub const PATCH_DEGREE: usize = 4;

/// Hierarchical basis of element `e` with every edge oriented from its lower global node.
pub fn element_basis(mesh: &Mesh, e: usize, degree: usize) -> Result<TriangleBasis> {
    let t = mesh.triangle(e);
    Ok(TriangleBasis::hierarchical(degree)?.with_orientation(std::array::from_fn(|k| t[k] > t[(k + 1) % 3])))
}

/// Continuous scalar numbering of the hierarchical space on one patch.
#[derive(Debug, Clone)]
pub struct PatchSpace {
    pub vertex: usize,
    pub degree: usize,
    pub elements: Vec<usize>,
    pub nodes: Vec<usize>,
    pub edges: Vec<usize>,
    /// Scalar patch index of each element-local basis function.
    pub local_to_patch: Vec<Vec<usize>>,
    pub num_scalar: usize,
}

impl PatchSpace {
    pub fn new(mesh: &Mesh, vertex: usize, degree: usize) -> Self {
        let elements = mesh.node_elements(vertex).to_vec();
        let mut node_set = BTreeMap::new();
        let mut edge_set = BTreeMap::new();
        for &e in &elements {
            for v in mesh.triangle(e) {
                node_set.insert(v, 0);
            }
            for ed in mesh.element_edges(e) {
                edge_set.insert(ed, 0);
            }
        }
        for (k, v) in node_set.values_mut().enumerate() {
            *v = k;
        }
        for (k, v) in edge_set.values_mut().enumerate() {
            *v = k;
        }
        let m = degree - 1;
        let nb = (degree - 1) * degree.saturating_sub(2) / 2;
        let nv = node_set.len();
        let ne = edge_set.len();
        let local_to_patch = elements
            .iter()
            .enumerate()
            .map(|(pos, &e)| {
                let t = mesh.triangle(e);
                let eds = mesh.element_edges(e);
                let mut map: Vec<usize> = t.iter().map(|v| node_set[v]).collect();
                for ed in eds {
                    map.extend((0..m).map(|mode| nv + edge_set[&ed] * m + mode));
                }
                map.extend((0..nb).map(|b| nv + ne * m + pos * nb + b));
                map
            })
            .collect();
        Self {
            vertex,
            degree,
            num_scalar: nv + ne * m + elements.len() * nb,
            elements,
            nodes: node_set.into_keys().collect(),
            edges: edge_set.into_keys().collect(),
            local_to_patch,
        }
    }

    pub fn num_vertex_functions(&self) -> usize {
        self.nodes.len()
    }

    /// Vector unknown index of scalar function `s`, component `c`.
    pub fn dof(s: usize, c: usize) -> usize {
        2 * s + c
    }
}

/// Assembled patch problem.
#[derive(Debug, Clone)]
pub struct PatchSystem {
    pub space: PatchSpace,
    pub stiffness: DMatrix<f64>,
    pub rhs: DVector<f64>,
    /// Vector unknowns fixed to zero on Dirichlet edges.
    pub fixed: Vec<bool>,
    /// Rows of L2-orthogonality to the rigid modes left free by the Dirichlet data.
    pub rigid_constraints: DMatrix<f64>,
}

/// `R_h(v) = -int sigma_h : eps(v) + int f . v + int_{Neumann} F_d . v` for
/// `v = lambda_i phi e_c`, where `phi` is local function `j` of element `e`.
/// Returns the contribution of element `e` and its Neumann edges.
pub fn residual_on_element(mesh: &Mesh, solution: &FemSolution, vertex: usize, e: usize, basis: &TriangleBasis, degree_hint: usize) -> Vec<Vector2<f64>> {
    let g = TriangleGeometry::of(mesh, e);
    let a = mesh.local_vertex(e, vertex).expect("vertex of element");
    let n = basis.len();
    let mut out = vec![Vector2::zeros(); n];
    let mut v = vec![0.0; n];
    let mut d = vec![[0.0; 3]; n];
    let sigma: Stress = solution.stress[e];
    let body = &solution.loads.body_force;
    let rule = triangle_rule(2 * degree_hint).expect("tabulated");
    for (l, w) in rule.barycentric() {
        basis.eval_barycentric(l, &mut v, &mut d);
        let wj = w * g.jacobian();
        let x = g.point(l);
        let f = body.eval(&x);
        for j in 0..n {
            let grad = g.grad_lambda[a] * v[j] + g.gradient(&d[j]) * l[a];
            out[j] += (-stress_dot(&sigma, &grad) + f * (l[a] * v[j])) * wj;
        }
    }
    let er = edge_rule(2 * degree_hint).expect("tabulated");
    for k in 0..3 {
        let edge = mesh.element_edges(e)[k];
        if mesh.boundary_condition(edge).is_none() {
            continue;
        }
        let len = g.edge_length(k);
        for (p, w) in er.iter() {
            let l = TriangleGeometry::edge_point(k, p[0]);
            if l[a] == 0.0 {
                continue;
            }
            basis.eval_barycentric(l, &mut v, &mut d);
            let fd = solution.loads.neumann_traction(mesh, edge, &g.point(l));
            for j in 0..n {
                out[j] += fd * (w * len * l[a] * v[j]);
            }
        }
    }
    out
}

pub fn build_patch_system(mesh: &Mesh, solution: &FemSolution, vertex: usize) -> Result<PatchSystem> {
    let degree = PATCH_DEGREE;
    let space = PatchSpace::new(mesh, vertex, degree);
    let n = 2 * space.num_scalar;
    let dmat = solution.material.stiffness();
    let mut k = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    let mut fixed = vec![false; n];
    let mut l2 = DMatrix::zeros(3, n);

    let centroid = {
        let area: f64 = space.elements.iter().map(|&e| mesh.area(e)).sum();
        let s = space.elements.iter().fold(Vector2::zeros(), |acc, &e| acc + TriangleGeometry::of(mesh, e).centroid().coords * mesh.area(e));
        s / area
    };
    let rule = triangle_rule(2 * degree)?;
    for (pos, &e) in space.elements.iter().enumerate() {
        let basis = element_basis(mesh, e, degree)?;
        let g = TriangleGeometry::of(mesh, e);
        let map = &space.local_to_patch[pos];
        let nb = basis.len();
        let mut v = vec![0.0; nb];
        let mut d = vec![[0.0; 3]; nb];
        let mut bm = DMatrix::zeros(3, 2 * nb);
        let mut ke = DMatrix::zeros(2 * nb, 2 * nb);
        for (l, w) in rule.barycentric() {
            basis.eval_barycentric(l, &mut v, &mut d);
            let wj = w * g.jacobian();
            let x = g.point(l).coords - centroid;
            for j in 0..nb {
                let gr = g.gradient(&d[j]);
                bm[(0, 2 * j)] = gr.x;
                bm[(1, 2 * j + 1)] = gr.y;
                bm[(2, 2 * j)] = gr.y;
                bm[(2, 2 * j + 1)] = gr.x;
                let s = map[j];
                l2[(0, 2 * s)] += v[j] * wj;
                l2[(1, 2 * s + 1)] += v[j] * wj;
                l2[(2, 2 * s)] -= x.y * v[j] * wj;
                l2[(2, 2 * s + 1)] += x.x * v[j] * wj;
            }
            ke += bm.transpose() * (dmat * &bm) * wj;
        }
        for r in 0..2 * nb {
            for c in 0..2 * nb {
                k[(2 * map[r / 2] + r % 2, 2 * map[c / 2] + c % 2)] += ke[(r, c)];
            }
        }
        let res = residual_on_element(mesh, solution, vertex, e, &basis, degree);
        for j in 3..nb {
            for c in 0..2 {
                rhs[2 * map[j] + c] += res[j][c];
            }
        }
        // Dirichlet components vanish on every Dirichlet edge of the patch elements
        let m = degree - 1;
        for (kk, &edge) in mesh.element_edges(e).iter().enumerate() {
            let Some(bc) = mesh.boundary_condition(edge) else { continue };
            for c in 0..2 {
                if bc.is_dirichlet(c) {
                    fixed[2 * map[kk] + c] = true;
                    fixed[2 * map[(kk + 1) % 3] + c] = true;
                    for mode in 0..m {
                        fixed[2 * map[3 + kk * m + mode] + c] = true;
                    }
                }
            }
        }
    }

    for (r, _) in fixed.iter().enumerate().filter(|(_, &f)| f) {
        rhs[r] = 0.0;
    }

    // rigid modes compatible with the fixed vertex values
    let mut vals = Vec::new();
    for (s, &node) in space.nodes.iter().enumerate() {
        let x = mesh.node(node).coords - centroid;
        let modes = [[1.0, 0.0], [0.0, 1.0], [-x.y, x.x]];
        for c in 0..2 {
            if fixed[2 * s + c] {
                vals.push([modes[0][c], modes[1][c], modes[2][c]]);
            }
        }
    }
    let gmat = DMatrix::from_fn(vals.len(), 3, |r, c| vals[r][c]);
    let surviving = null_space(&gmat, 1e-10);
    let rigid_constraints = surviving.transpose() * l2;
    Ok(PatchSystem { space, stiffness: k, rhs, fixed, rigid_constraints })
}

/// Solution of one patch problem.
#[derive(Debug, Clone)]
pub struct PatchSolution {
    pub vertex: usize,
    /// Full vector of patch unknowns (fixed entries are zero).
    pub coefficients: DVector<f64>,
    pub energy: f64,
}

impl PatchSystem {
    pub fn free_dofs(&self) -> Vec<usize> {
        (0..self.fixed.len()).filter(|&i| !self.fixed[i]).collect()
    }

    pub fn solve(&self) -> Result<PatchSolution> {
        let free = self.free_dofs();
        let nf = free.len();
        let kf = DMatrix::from_fn(nf, nf, |r, c| self.stiffness[(free[r], free[c])]);
        let ff = DVector::from_fn(nf, |r, _| self.rhs[free[r]]);
        let cf = DMatrix::from_fn(self.rigid_constraints.nrows(), nf, |r, c| self.rigid_constraints[(r, free[c])]);
        let context = format!("patch problem of vertex {}", self.space.vertex);
        let xf = if cf.nrows() == 0 {
            solve_dense(kf, ff, &context)?
        } else {
            let mut rhs = DVector::zeros(nf + cf.nrows());
            rhs.rows_mut(0, nf).copy_from(&ff);
            solve_saddle(&kf, &cf, rhs, &context)?.rows(0, nf).into_owned()
        };
        let mut x = DVector::zeros(self.fixed.len());
        for (r, &i) in free.iter().enumerate() {
            x[i] = xf[r];
        }
        let energy = x.dot(&(&self.stiffness * &x));
        Ok(PatchSolution { vertex: self.space.vertex, coefficients: x, energy })
    }
}

pub fn solve_patch(mesh: &Mesh, solution: &FemSolution, vertex: usize) -> Result<PatchSolution> {
    build_patch_system(mesh, solution, vertex)?.solve()
}

/// Result of the star-patch technique.
#[derive(Debug, Clone)]
pub struct SpetResult {
    /// `sigma_h + K eps(sum_i e_i)`.
    pub stress: AdmissibleStress,
    /// `|| sum_i e_i ||_{u,E}` per element.
    pub contributions: Vec<f64>,
    pub theta: f64,
}

/// Solves all patches and sums the local corrections element by element.
pub fn spet_estimate(mesh: &Mesh, solution: &FemSolution) -> Result<SpetResult> {
    let degree = PATCH_DEGREE;
    let patches: Result<Vec<(PatchSpace, PatchSolution)>> = (0..mesh.num_nodes())
        .into_par_iter()
        .map(|i| {
            let sys = build_patch_system(mesh, solution, i)?;
            let sol = sys.solve()?;
            Ok((sys.space, sol))
        })
        .collect();
    let patches = patches?;
    let nb = TriangleBasis::hierarchical(degree)?.len();
    let mut local = vec![DVector::<f64>::zeros(2 * nb); mesh.num_elements()];
    for (space, sol) in &patches {
        for (pos, &e) in space.elements.iter().enumerate() {
            for (j, &s) in space.local_to_patch[pos].iter().enumerate() {
                local[e][2 * j] += sol.coefficients[2 * s];
                local[e][2 * j + 1] += sol.coefficients[2 * s + 1];
            }
        }
    }
    let lagrange = TriangleBasis::lagrange(degree)?;
    let nodes = lagrange.lagrange_nodes();
    let correction: Result<Vec<DVector<f64>>> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let h = element_basis(mesh, e, degree)?;
            let mut v = vec![0.0; nb];
            let mut d = vec![[0.0; 3]; nb];
            let mut out = DVector::zeros(2 * nodes.len());
            for (r, l) in nodes.iter().enumerate() {
                h.eval_barycentric(*l, &mut v, &mut d);
                for j in 0..nb {
                    out[2 * r] += v[j] * local[e][2 * j];
                    out[2 * r + 1] += v[j] * local[e][2 * j + 1];
                }
            }
            Ok(out)
        })
        .collect();
    let stress = AdmissibleStress {
        material: solution.material,
        basis: lagrange,
        base: solution.stress.clone(),
        correction: correction?,
    };
    let norms = crate::fem::complementary_norm(mesh, &solution.material, 2 * (degree - 1), |e, l| {
        stress.stress(mesh, e, l) - solution.stress[e]
    })?;
    Ok(SpetResult { stress, contributions: norms.per_element, theta: norms.total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn patch_test_gives_zero() {
        let f = fixtures::patch_test();
        let sol = f.solve().unwrap();
        for i in 0..f.mesh.num_nodes() {
            let sys = build_patch_system(&f.mesh, &sol, i).unwrap();
            assert!(sys.rhs.amax() < 1e-12);
            let p = sys.solve().unwrap();
            assert!(p.energy.abs() < 1e-12);
        }
        let r = spet_estimate(&f.mesh, &sol).unwrap();
        assert!(r.theta < 1e-10);
    }

    #[test]
    fn vertex_rows_are_zero_and_rigid_modes_balanced() {
        let f = fixtures::plate_with_hole_quarter();
        let sol = f.solve().unwrap();
        for i in [0, 7, 20] {
            let sys = build_patch_system(&f.mesh, &sol, i).unwrap();
            let nv = sys.space.num_vertex_functions();
            for s in 0..nv {
                assert_eq!(sys.rhs[2 * s], 0.0);
                assert_eq!(sys.rhs[2 * s + 1], 0.0);
            }
            // rigid modes have only vertex coefficients, where the right-hand side vanishes
            let scale = sys.rhs.amax();
            let mut rot = DVector::zeros(sys.rhs.len());
            for (s, &node) in sys.space.nodes.iter().enumerate() {
                let x = f.mesh.node(node);
                rot[2 * s] = -x.y;
                rot[2 * s + 1] = x.x;
            }
            assert!(sys.rhs.dot(&rot).abs() <= 1e-10 * scale.max(1.0));
            // the stiffness annihilates rigid modes
            assert!((&sys.stiffness * &rot).amax() < 1e-10 * sys.stiffness.amax());
        }
    }

    #[test]
    fn continuity_of_patch_space() {
        // shared edge functions of two elements must coincide along the edge
        let f = fixtures::patch_test();
        let mesh = &f.mesh;
        for edge in 0..mesh.num_edges() {
            let (e0, Some(e1)) = mesh.edge_elements(edge) else { continue };
            let b0 = element_basis(mesh, e0, 4).unwrap();
            let b1 = element_basis(mesh, e1, 4).unwrap();
            let k0 = mesh.local_edge(e0, edge).unwrap();
            let k1 = mesh.local_edge(e1, edge).unwrap();
            let g0 = TriangleGeometry::of(mesh, e0);
            let g1 = TriangleGeometry::of(mesh, e1);
            let t = 0.3;
            let l0 = TriangleGeometry::edge_point(k0, t);
            let x = g0.point(l0);
            // same point in element 1
            let t1 = (x - g1.vertices[k1]).norm() / g1.edge_length(k1);
            let l1 = TriangleGeometry::edge_point(k1, t1);
            let (mut v0, mut v1) = (vec![0.0; 15], vec![0.0; 15]);
            let (mut d0, mut d1) = (vec![[0.0; 3]; 15], vec![[0.0; 3]; 15]);
            b0.eval_barycentric(l0, &mut v0, &mut d0);
            b1.eval_barycentric(l1, &mut v1, &mut d1);
            for mode in 0..3 {
                assert!((v0[3 + 3 * k0 + mode] - v1[3 + 3 * k1 + mode]).abs() < 1e-13);
            }
        }
    }
}
