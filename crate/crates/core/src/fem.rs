//! Linear plane-stress finite elements: material law, loads, the global
//! displacement solve and energy norms.

use nalgebra::{Matrix2, Matrix3, Point2, Vector2, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::TriangleGeometry;
use crate::linalg::solve_spd_sparse;
use crate::mesh::Mesh;
use crate::quadrature::{edge_rule, triangle_rule};

/// Stress in Voigt order `(xx, yy, xy)`.
pub type Stress = Vector3<f64>;

/// Strain in Voigt order `(xx, yy, 2 xy)`.
pub type Strain = Vector3<f64>;

/// Isotropic linear elastic material in plane stress.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub young: f64,
    pub poisson: f64,
}

impl Material {
    pub fn new(young: f64, poisson: f64) -> Result<Self> {
        if young.is_nan() || young <= 0.0 {
            return Err(Error::InvalidMaterial(format!("Young's modulus must be positive, got {young}")));
        }
        if !(poisson > -1.0 && poisson < 0.5) {
            return Err(Error::InvalidMaterial(format!("Poisson's ratio must lie in (-1, 0.5), got {poisson}")));
        }
        Ok(Self { young, poisson })
    }

    /// Hooke operator mapping Voigt strain to stress.
    pub fn stiffness(&self) -> Matrix3<f64> {
        let (e, nu) = (self.young, self.poisson);
        let c = e / (1.0 - nu * nu);
        Matrix3::new(c, c * nu, 0.0, c * nu, c, 0.0, 0.0, 0.0, c * (1.0 - nu) / 2.0)
    }

    /// Inverse Hooke operator mapping Voigt stress to strain.
    pub fn compliance(&self) -> Matrix3<f64> {
        let (e, nu) = (self.young, self.poisson);
        Matrix3::new(1.0, -nu, 0.0, -nu, 1.0, 0.0, 0.0, 0.0, 2.0 * (1.0 + nu)) / e
    }
}

impl Default for Material {
    fn default() -> Self {
        Self { young: 1.0, poisson: 0.3 }
    }
}

/// Vector field `c + G x`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AffineField {
    pub constant: Vector2<f64>,
    pub gradient: Matrix2<f64>,
}

impl AffineField {
    pub fn constant(x: f64, y: f64) -> Self {
        Self { constant: Vector2::new(x, y), gradient: Matrix2::zeros() }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn eval(&self, p: &Point2<f64>) -> Vector2<f64> {
        self.constant + self.gradient * p.coords
    }

    pub fn is_zero(&self) -> bool {
        self.constant == Vector2::zeros() && self.gradient == Matrix2::zeros()
    }
}

/// Displacement and traction data attached to one boundary group.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundaryData {
    /// Used for the Dirichlet components of the group's edges.
    pub displacement: AffineField,
    /// Used for the Neumann components of the group's edges.
    pub traction: AffineField,
}

impl BoundaryData {
    pub fn fixed() -> Self {
        Self::default()
    }

    pub fn traction(x: f64, y: f64) -> Self {
        Self { displacement: AffineField::zero(), traction: AffineField::constant(x, y) }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadCase {
    pub body_force: AffineField,
    /// Indexed by [`BoundaryCondition::group`](crate::mesh::BoundaryCondition).
    pub boundary: Vec<BoundaryData>,
}

impl LoadCase {
    pub fn check(&self, mesh: &Mesh) -> Result<()> {
        for e in 0..mesh.num_edges() {
            if let Some(bc) = mesh.boundary_condition(e) {
                if bc.group >= self.boundary.len() {
                    return Err(Error::MissingBoundaryData { group: bc.group });
                }
            }
        }
        Ok(())
    }

    /// Prescribed traction on a boundary edge at point `p`, with Dirichlet
    /// components zeroed.
    pub fn neumann_traction(&self, mesh: &Mesh, edge: usize, p: &Point2<f64>) -> Vector2<f64> {
        let bc = mesh.boundary_condition(edge).expect("boundary edge");
        let t = self.boundary[bc.group].traction.eval(p);
        Vector2::new(
            if bc.is_neumann(0) { t.x } else { 0.0 },
            if bc.is_neumann(1) { t.y } else { 0.0 },
        )
    }

    /// Whether all prescribed displacements vanish.
    pub fn homogeneous_dirichlet(&self) -> bool {
        self.boundary.iter().all(|b| b.displacement.is_zero())
    }
}

/// Traction `sigma n`.
pub fn traction(s: &Stress, n: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(s.x * n.x + s.z * n.y, s.z * n.x + s.y * n.y)
}

/// `sigma . g` for a gradient vector `g` (the same contraction as a traction).
pub fn stress_dot(s: &Stress, g: &Vector2<f64>) -> Vector2<f64> {
    traction(s, g)
}

/// Strain-displacement matrix of the linear triangle, acting on `(u0x, u0y, u1x, ...)`.
pub fn linear_b_matrix(g: &TriangleGeometry) -> nalgebra::SMatrix<f64, 3, 6> {
    let mut b = nalgebra::SMatrix::<f64, 3, 6>::zeros();
    for a in 0..3 {
        let d = g.grad_lambda[a];
        b[(0, 2 * a)] = d.x;
        b[(1, 2 * a + 1)] = d.y;
        b[(2, 2 * a)] = d.y;
        b[(2, 2 * a + 1)] = d.x;
    }
    b
}

/// Linear finite element solution.
#[derive(Debug, Clone)]
pub struct FemSolution {
    pub degree: usize,
    pub material: Material,
    pub loads: LoadCase,
    /// Nodal displacements.
    pub displacement: Vec<Vector2<f64>>,
    /// Constant stress per element.
    pub stress: Vec<Stress>,
    /// Largest stress component over the mesh.
    pub stress_level: f64,
    /// `a(u_h, u_h)`.
    pub strain_energy: f64,
    /// Relative residual of the discrete equilibrium over the free DOFs.
    pub equilibrium_residual: f64,
    pub num_free_dofs: usize,
}

impl FemSolution {
    /// Strain of element `e`.
    pub fn strain(&self, mesh: &Mesh, e: usize) -> Strain {
        element_strain(mesh, e, &self.displacement)
    }

    /// Displacement at barycentric point `l` of element `e`.
    pub fn displacement_at(&self, mesh: &Mesh, e: usize, l: [f64; 3]) -> Vector2<f64> {
        let t = mesh.triangle(e);
        self.displacement[t[0]] * l[0] + self.displacement[t[1]] * l[1] + self.displacement[t[2]] * l[2]
    }
}

pub fn element_strain(mesh: &Mesh, e: usize, u: &[Vector2<f64>]) -> Strain {
    let g = TriangleGeometry::of(mesh, e);
    let t = mesh.triangle(e);
    let mut ue = nalgebra::SVector::<f64, 6>::zeros();
    for a in 0..3 {
        ue[2 * a] = u[t[a]].x;
        ue[2 * a + 1] = u[t[a]].y;
    }
    linear_b_matrix(&g) * ue
}

/// Consistent nodal loads of the linear triangle from an affine body force.
fn body_load(g: &TriangleGeometry, f: &AffineField) -> [Vector2<f64>; 3] {
    let rule = triangle_rule(2).expect("tabulated");
    let mut out = [Vector2::zeros(); 3];
    for (l, w) in rule.barycentric() {
        let fv = f.eval(&g.point(l)) * (w * g.jacobian());
        for a in 0..3 {
            out[a] += fv * l[a];
        }
    }
    out
}

/// `int_edge t phi_a` for the two end points (canonical order) of a boundary edge.
pub(crate) fn edge_load(mesh: &Mesh, loads: &LoadCase, edge: usize) -> [Vector2<f64>; 2] {
    let [a, b] = mesh.edge(edge);
    let (pa, pb) = (mesh.node(a), mesh.node(b));
    let len = mesh.edge_length(edge);
    let rule = edge_rule(2).expect("tabulated");
    let mut out = [Vector2::zeros(); 2];
    for (p, w) in rule.iter() {
        let t = p[0];
        let x = Point2::from(pa.coords * (1.0 - t) + pb.coords * t);
        let tr = loads.neumann_traction(mesh, edge, &x) * (w * len);
        out[0] += tr * (1.0 - t);
        out[1] += tr * t;
    }
    out
}

/// Prescribed value of node component `(i, c)`, if any.
fn dirichlet_value(mesh: &Mesh, loads: &LoadCase, i: usize, c: usize) -> Option<f64> {
    mesh.node_edges(i).iter().find_map(|&e| {
        let bc = mesh.boundary_condition(e)?;
        bc.is_dirichlet(c).then(|| loads.boundary[bc.group].displacement.eval(mesh.node(i))[c])
    })
}

/// Assembles and solves the linear plane-stress problem.
///
/// Prescribed displacements are eliminated from the system; the reduced
/// stiffness is factorised with a sparse Cholesky decomposition.
pub fn assemble_solve(mesh: &Mesh, material: &Material, loads: &LoadCase, degree: usize) -> Result<FemSolution> {
    if degree != 1 {
        return Err(Error::UnsupportedDegree(degree));
    }
    loads.check(mesh)?;
    let n = mesh.num_nodes();
    let d = material.stiffness();

    let mut fixed: Vec<Option<f64>> = vec![None; 2 * n];
    for i in 0..n {
        for c in 0..2 {
            fixed[2 * i + c] = dirichlet_value(mesh, loads, i, c);
        }
    }
    let mut free_index = vec![usize::MAX; 2 * n];
    let mut num_free = 0;
    for (dof, f) in fixed.iter().enumerate() {
        if f.is_none() {
            free_index[dof] = num_free;
            num_free += 1;
        }
    }

    let element_data: Vec<_> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let g = TriangleGeometry::of(mesh, e);
            let b = linear_b_matrix(&g);
            let k = b.transpose() * d * b * g.area;
            (k, body_load(&g, &loads.body_force))
        })
        .collect();

    let mut force = vec![0.0; 2 * n];
    for (e, (_, fb)) in element_data.iter().enumerate() {
        for (a, &node) in mesh.triangle(e).iter().enumerate() {
            force[2 * node] += fb[a].x;
            force[2 * node + 1] += fb[a].y;
        }
    }
    for edge in 0..mesh.num_edges() {
        if mesh.is_boundary_edge(edge) {
            let fl = edge_load(mesh, loads, edge);
            for (k, &node) in mesh.edge(edge).iter().enumerate() {
                force[2 * node] += fl[k].x;
                force[2 * node + 1] += fl[k].y;
            }
        }
    }

    let mut triplets = Vec::with_capacity(36 * mesh.num_elements());
    let mut rhs: Vec<f64> = (0..2 * n).filter(|&g| fixed[g].is_none()).map(|g| force[g]).collect();
    for (e, (k, _)) in element_data.iter().enumerate() {
        let t = mesh.triangle(e);
        let dofs: [usize; 6] = std::array::from_fn(|j| 2 * t[j / 2] + j % 2);
        for (r, &gr) in dofs.iter().enumerate() {
            let fr = free_index[gr];
            if fr == usize::MAX {
                continue;
            }
            for (c, &gc) in dofs.iter().enumerate() {
                match fixed[gc] {
                    Some(v) => rhs[fr] -= k[(r, c)] * v,
                    None => triplets.push((fr, free_index[gc], k[(r, c)])),
                }
            }
        }
    }

    let sol = solve_spd_sparse(num_free, &triplets, &rhs)?;
    let mut u = vec![0.0; 2 * n];
    for dof in 0..2 * n {
        u[dof] = match fixed[dof] {
            Some(v) => v,
            None => sol[free_index[dof]],
        };
    }
    let displacement: Vec<_> = (0..n).map(|i| Vector2::new(u[2 * i], u[2 * i + 1])).collect();

    // residual K u - f on free DOFs and strain energy u^T K u
    let mut ku = vec![0.0; 2 * n];
    let mut energy = 0.0;
    for (e, (k, _)) in element_data.iter().enumerate() {
        let t = mesh.triangle(e);
        let dofs: [usize; 6] = std::array::from_fn(|j| 2 * t[j / 2] + j % 2);
        for r in 0..6 {
            let mut acc = 0.0;
            for c in 0..6 {
                acc += k[(r, c)] * u[dofs[c]];
            }
            ku[dofs[r]] += acc;
            energy += u[dofs[r]] * acc;
        }
    }
    let (mut res2, mut scale2) = (0.0, 0.0);
    for dof in 0..2 * n {
        if fixed[dof].is_none() {
            res2 += (ku[dof] - force[dof]).powi(2);
            scale2 += force[dof].powi(2) + ku[dof].powi(2);
        }
    }
    let equilibrium_residual = if scale2 > 0.0 { (res2 / scale2).sqrt() } else { res2.sqrt() };

    let stress: Vec<Stress> = (0..mesh.num_elements()).map(|e| d * element_strain(mesh, e, &displacement)).collect();
    let stress_level = stress.iter().map(|s| s.amax()).fold(0.0, f64::max);
    Ok(FemSolution {
        degree,
        material: *material,
        loads: loads.clone(),
        displacement,
        stress,
        stress_level,
        strain_energy: energy,
        equilibrium_residual,
        num_free_dofs: num_free,
    })
}

/// A global norm together with its element contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct NormMap {
    pub total: f64,
    /// Per element norms; their squares sum to `total^2`.
    pub per_element: Vec<f64>,
}

impl NormMap {
    pub fn from_squares(squares: Vec<f64>) -> Self {
        let total = squares.iter().sum::<f64>().sqrt();
        Self { total, per_element: squares.into_iter().map(f64::sqrt).collect() }
    }
}

/// Energy norm `(int eps(u) : K : eps(u))^(1/2)` of a piecewise linear nodal field.
pub fn energy_norm(mesh: &Mesh, material: &Material, u: &[Vector2<f64>]) -> NormMap {
    let d = material.stiffness();
    let squares = (0..mesh.num_elements())
        .map(|e| {
            let eps = element_strain(mesh, e, u);
            eps.dot(&(d * eps)) * mesh.area(e)
        })
        .collect();
    NormMap::from_squares(squares)
}

/// Complementary energy norm `(int sigma : K^-1 : sigma)^(1/2)` of an
/// element-wise stress field given at barycentric points.
pub fn complementary_norm<F>(mesh: &Mesh, material: &Material, exactness: usize, stress: F) -> Result<NormMap>
where
    F: Fn(usize, [f64; 3]) -> Stress + Sync,
{
    let c = material.compliance();
    let rule = triangle_rule(exactness)?;
    let squares = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let jac = 2.0 * mesh.area(e);
            rule.barycentric()
                .map(|(l, w)| {
                    let s = stress(e, l);
                    s.dot(&(c * s)) * w * jac
                })
                .sum()
        })
        .collect();
    Ok(NormMap::from_squares(squares))
}
