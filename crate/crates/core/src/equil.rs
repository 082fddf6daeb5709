//! Pieces shared by the traction-based techniques: edge traction fields,
//! projections of the finite element stress onto edges, nodal load vectors,
//! cost-function weights and the equilibrium checks.

use nalgebra::{Matrix2, Point2, Vector2, Vector3};

use crate::fem::{stress_dot, traction, FemSolution, LoadCase, Material};
use crate::geometry::TriangleGeometry;
use crate::mesh::Mesh;
use crate::quadrature::{edge_rule, triangle_rule};

/// Piecewise linear, single-valued traction on every edge.
///
/// `nodal[edge] = [F(lo), F(hi)]` in the canonical edge orientation; the
/// element `E` sees `eta_E * F`.
#[derive(Debug, Clone, PartialEq)]
pub struct TractionField {
    pub nodal: Vec<[Vector2<f64>; 2]>,
}

impl TractionField {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self { nodal: vec![[Vector2::zeros(); 2]; mesh.num_edges()] }
    }

    /// Traction at parameter `t` from the lower to the higher node.
    pub fn eval(&self, edge: usize, t: f64) -> Vector2<f64> {
        let [a, b] = self.nodal[edge];
        a * (1.0 - t) + b * t
    }

    /// Traction acting on element `e` at parameter `t` along its local edge `k`
    /// (measured from local vertex `k`).
    pub fn on_element(&self, mesh: &Mesh, e: usize, k: usize, t: f64) -> Vector2<f64> {
        let edge = mesh.element_edges(e)[k];
        let tri = mesh.triangle(e);
        let s = if tri[k] < tri[(k + 1) % 3] { t } else { 1.0 - t };
        self.eval(edge, s) * mesh.eta(edge, e)
    }
}

/// Edge weighting used in the traction minimisations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostFunction {
    /// Plain squared distance of the coefficients.
    J0,
    /// Scaled by the inverse squared edge length.
    J1,
    /// Elastic energy density split into normal and tangential parts.
    J2,
}

impl CostFunction {
    pub const ALL: [CostFunction; 3] = [CostFunction::J0, CostFunction::J1, CostFunction::J2];

    pub fn label(&self) -> &'static str {
        match self {
            CostFunction::J0 => "J0",
            CostFunction::J1 => "J1",
            CostFunction::J2 => "J2",
        }
    }
}

impl std::str::FromStr for CostFunction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "J0" => Ok(CostFunction::J0),
            "J1" => Ok(CostFunction::J1),
            "J2" => Ok(CostFunction::J2),
            other => Err(format!("unknown cost function '{other}'")),
        }
    }
}

/// Symmetric positive definite 2x2 weight applied to each traction coefficient on `edge`.
pub fn cost_weight(kind: CostFunction, mesh: &Mesh, material: &Material, edge: usize) -> Matrix2<f64> {
    let l = mesh.edge_length(edge);
    match kind {
        CostFunction::J0 => Matrix2::identity(),
        CostFunction::J1 => Matrix2::identity() / (l * l),
        CostFunction::J2 => {
            let (e, nu) = (material.young, material.poisson);
            let n = mesh.edge_normal(edge);
            let nn = n * n.transpose();
            let tt = Matrix2::identity() - nn;
            (nn * ((1.0 - 2.0 * nu) / (1.0 - nu)) + tt * 2.0) * ((1.0 + nu) / (e * l * l))
        }
    }
}

/// Projection of the finite element traction on `edge`, as nodal values in the
/// canonical orientation.
///
/// Interior edges average both sides, Dirichlet components take the one-sided
/// value and Neumann components take the prescribed traction.
pub fn fe_stress_projection(mesh: &Mesh, solution: &FemSolution, edge: usize) -> [Vector2<f64>; 2] {
    let n = mesh.edge_normal(edge);
    let (first, second) = mesh.edge_elements(edge);
    let inside = match second {
        Some(other) => (traction(&solution.stress[first], &n) + traction(&solution.stress[other], &n)) * 0.5,
        None => traction(&solution.stress[first], &n),
    };
    let mut out = [inside; 2];
    if let Some(bc) = mesh.boundary_condition(edge) {
        for (k, &node) in mesh.edge(edge).iter().enumerate() {
            let fd = solution.loads.neumann_traction(mesh, edge, mesh.node(node));
            for c in 0..2 {
                if bc.is_neumann(c) {
                    out[k][c] = fd[c];
                }
            }
        }
    }
    out
}

/// `Q_E^(i) = int_E (sigma_h grad(phi_i) - f phi_i)` for every element `E` around `node`,
/// ordered as [`Mesh::node_elements`].
pub fn node_load_vectors(mesh: &Mesh, solution: &FemSolution, node: usize) -> Vec<(usize, Vector2<f64>)> {
    mesh.node_elements(node)
        .iter()
        .map(|&e| (e, element_node_load(mesh, solution, e, mesh.local_vertex(e, node).expect("adjacent"))))
        .collect()
}

/// `Q_E^(i)` for local vertex `a` of element `e`.
pub fn element_node_load(mesh: &Mesh, solution: &FemSolution, e: usize, a: usize) -> Vector2<f64> {
    let g = TriangleGeometry::of(mesh, e);
    let mut q = stress_dot(&solution.stress[e], &g.grad_lambda[a]) * g.area;
    let body = &solution.loads.body_force;
    if !body.is_zero() {
        let rule = triangle_rule(2).expect("tabulated");
        for (l, w) in rule.barycentric() {
            q -= body.eval(&g.point(l)) * (l[a] * w * g.jacobian());
        }
    }
    q
}

/// Magnitude of the terms of `Q_E^(i)` around `node`: the global stress level
/// against `grad(phi_i)` plus the body force, taken separately so that nothing
/// cancels. Compatibility residuals are measured against it.
pub fn node_load_scale(mesh: &Mesh, solution: &FemSolution, node: usize) -> f64 {
    let body = &solution.loads.body_force;
    let rule = triangle_rule(2).expect("tabulated");
    mesh.node_elements(node)
        .iter()
        .map(|&e| {
            let g = TriangleGeometry::of(mesh, e);
            let a = mesh.local_vertex(e, node).expect("adjacent");
            let mut s = solution.stress_level * g.grad_lambda[a].abs().sum() * g.area;
            if !body.is_zero() {
                for (l, w) in rule.barycentric() {
                    s += body.eval(&g.point(l)).abs().sum() * (l[a] * w * g.jacobian());
                }
            }
            s
        })
        .sum()
}

/// `int_edge F_d phi` for both end points (canonical order) of a boundary edge;
/// Dirichlet components are zero.
pub fn neumann_moments(mesh: &Mesh, loads: &LoadCase, edge: usize) -> [Vector2<f64>; 2] {
    crate::fem::edge_load(mesh, loads, edge)
}

/// Force and moment balance of one element loaded by `eta F` and the body force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementBalance {
    /// Net force and moment about the centroid (moment divided by the element diameter).
    pub residual: Vector3<f64>,
    /// Sum of the magnitudes of all contributions.
    pub scale: f64,
}

impl ElementBalance {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual.amax() / self.scale
        } else {
            self.residual.amax()
        }
    }
}

fn cross(r: &Vector2<f64>, f: &Vector2<f64>) -> f64 {
    r.x * f.y - r.y * f.x
}

/// Rigid-body equilibrium of element `e` under the tractions and body force.
pub fn element_balance(mesh: &Mesh, tractions: &TractionField, loads: &LoadCase, e: usize) -> ElementBalance {
    let g = TriangleGeometry::of(mesh, e);
    let c = g.centroid();
    let diam = (0..3).map(|k| g.edge_length(k)).fold(0.0, f64::max);
    let mut res = Vector3::zeros();
    let mut scale = 0.0;
    let mut add = |x: Point2<f64>, f: Vector2<f64>| {
        let m = cross(&(x - c), &f) / diam;
        res += Vector3::new(f.x, f.y, m);
        scale += f.abs().sum() + m.abs();
    };
    let er = edge_rule(2).expect("tabulated");
    for k in 0..3 {
        let len = g.edge_length(k);
        for (p, w) in er.iter() {
            let t = p[0];
            let x = g.point(TriangleGeometry::edge_point(k, t));
            add(x, tractions.on_element(mesh, e, k, t) * (w * len));
        }
    }
    if !loads.body_force.is_zero() {
        let tr = triangle_rule(2).expect("tabulated");
        for (l, w) in tr.barycentric() {
            let x = g.point(l);
            add(x, loads.body_force.eval(&x) * (w * g.jacobian()));
        }
    }
    ElementBalance { residual: res, scale }
}

/// Largest relative rigid-body residual over all elements.
pub fn max_element_imbalance(mesh: &Mesh, tractions: &TractionField, loads: &LoadCase) -> f64 {
    (0..mesh.num_elements())
        .map(|e| element_balance(mesh, tractions, loads, e).relative())
        .fold(0.0, f64::max)
}

/// Largest nodal deviation from the prescribed traction over the Neumann
/// components, relative to the larger of the peak prescribed traction and the
/// peak finite element stress.
pub fn neumann_mismatch(mesh: &Mesh, solution: &FemSolution, tractions: &TractionField) -> f64 {
    let mut dev: f64 = 0.0;
    let mut scale: f64 = solution.stress.iter().map(|s| s.amax()).fold(0.0, f64::max);
    for edge in 0..mesh.num_edges() {
        let Some(bc) = mesh.boundary_condition(edge) else { continue };
        for (k, &node) in mesh.edge(edge).iter().enumerate() {
            let fd = solution.loads.neumann_traction(mesh, edge, mesh.node(node));
            for c in 0..2 {
                if bc.is_neumann(c) {
                    dev = dev.max((tractions.nodal[edge][k][c] - fd[c]).abs());
                    scale = scale.max(fd[c].abs());
                }
            }
        }
    }
    if scale > 0.0 {
        dev / scale
    } else {
        dev
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_solve, AffineField, BoundaryData, Stress};
    use crate::mesh::BoundaryCondition;

    fn two_triangle_shear() -> (Mesh, FemSolution) {
        let on = |x: f64, v: f64| (x - v).abs() < 1e-12;
        let spec = move |a: &Point2<f64>, b: &Point2<f64>| {
            Some(if on(a.x, 0.0) && on(b.x, 0.0) {
                BoundaryCondition::dirichlet(0)
            } else if on(a.x, 1.0) && on(b.x, 1.0) {
                BoundaryCondition::neumann(1)
            } else {
                BoundaryCondition::neumann(2)
            })
        };
        let nodes = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(1.0, 1.0), Point2::new(0.0, 1.0)];
        let mesh = Mesh::build(nodes, vec![[0, 1, 2], [0, 2, 3]], &spec).unwrap();
        let loads = LoadCase {
            body_force: AffineField::zero(),
            boundary: vec![BoundaryData::fixed(), BoundaryData::traction(0.0, 1.0), BoundaryData::fixed()],
        };
        let sol = assemble_solve(&mesh, &Material::default(), &loads, 1).unwrap();
        (mesh, sol)
    }

    #[test]
    fn weights() {
        let (mesh, _) = two_triangle_shear();
        let m = Material::new(1.0, 0.0).unwrap();
        let diag = mesh.find_edge(0, 2).unwrap();
        let l2 = mesh.edge_length(diag).powi(2);
        let j0 = cost_weight(CostFunction::J0, &mesh, &m, diag);
        let j1 = cost_weight(CostFunction::J1, &mesh, &m, diag);
        assert!((j1 - j0 / l2).amax() < 1e-15);
        // nu = 0, E = 1: normal coefficient 1, tangential 2, times the J1 scaling
        let j2 = cost_weight(CostFunction::J2, &mesh, &m, diag);
        let n = mesh.edge_normal(diag);
        let t = Vector2::new(-n.y, n.x);
        assert!(((n.transpose() * j2 * n)[0] - 1.0 / l2).abs() < 1e-14);
        assert!(((t.transpose() * j2 * t)[0] - 2.0 / l2).abs() < 1e-14);
        let mat = Material::default();
        for kind in CostFunction::ALL {
            for e in 0..mesh.num_edges() {
                let w = cost_weight(kind, &mesh, &mat, e);
                assert!(w.symmetric_eigenvalues().min() > 0.0);
            }
        }
    }

    #[test]
    fn projection_on_shared_diagonal_is_average() {
        let (mesh, sol) = two_triangle_shear();
        let diag = mesh.find_edge(0, 2).unwrap();
        let n = mesh.edge_normal(diag);
        // element 0 = [0, 1, 2] lies below the diagonal
        assert!((n - Vector2::new(-1.0, 1.0) / 2f64.sqrt()).norm() < 1e-14);
        let s0 = sol.stress[0];
        let s1 = sol.stress[1];
        let t0 = Vector2::new(s0.x * n.x + s0.z * n.y, s0.z * n.x + s0.y * n.y);
        let t1 = Vector2::new(s1.x * n.x + s1.z * n.y, s1.z * n.x + s1.y * n.y);
        let p = fe_stress_projection(&mesh, &sol, diag);
        assert!((p[0] - (t0 + t1) / 2.0).norm() < 1e-14);
        assert_eq!(p[0], p[1]);
    }

    #[test]
    fn neumann_projection_is_data() {
        let (mesh, sol) = two_triangle_shear();
        let right = mesh.find_edge(1, 2).unwrap();
        let p = fe_stress_projection(&mesh, &sol, right);
        assert_eq!(p, [Vector2::new(0.0, 1.0); 2]);
    }

    #[test]
    fn load_vectors_compatibility() {
        let (mesh, sol) = two_triangle_shear();
        // node 2 is on the right (Neumann) and top (free) edges
        let q: Vector2<f64> = node_load_vectors(&mesh, &sol, 2).iter().map(|(_, q)| q).sum();
        let mut expected = Vector2::zeros();
        for &edge in mesh.node_edges(2).iter().filter(|&&e| mesh.is_boundary_edge(e)) {
            let k = mesh.edge(edge).iter().position(|&v| v == 2).unwrap();
            expected += neumann_moments(&mesh, &sol.loads, edge)[k];
        }
        assert!((q - expected).norm() < 1e-10);
    }

    #[test]
    fn single_element_load_vector() {
        let (mesh, sol) = two_triangle_shear();
        let g = TriangleGeometry::of(&mesh, 0);
        let s: Stress = sol.stress[0];
        for a in 0..3 {
            let d = g.grad_lambda[a];
            let direct = Vector2::new(s.x * d.x + s.z * d.y, s.z * d.x + s.y * d.y) * g.area;
            assert!((element_node_load(&mesh, &sol, 0, a) - direct).norm() < 1e-15);
        }
    }

    #[test]
    fn traction_on_element_respects_orientation() {
        let (mesh, _) = two_triangle_shear();
        let mut tf = TractionField::zeros(&mesh);
        let diag = mesh.find_edge(0, 2).unwrap();
        tf.nodal[diag] = [Vector2::new(1.0, 0.0), Vector2::new(3.0, 0.0)];
        // element 1 = [0, 2, 3]: local edge 0 runs 0 -> 2, eta = -1
        let k = mesh.local_edge(1, diag).unwrap();
        assert_eq!(k, 0);
        assert!((tf.on_element(&mesh, 1, k, 0.25).x + 1.5).abs() < 1e-15);
        // element 0 = [0, 1, 2]: local edge 2 runs 2 -> 0, eta = +1
        let k = mesh.local_edge(0, diag).unwrap();
        assert!((tf.on_element(&mesh, 0, k, 0.25).x - 2.5).abs() < 1e-15);
    }
}
