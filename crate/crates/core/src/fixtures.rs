//! Built-in test problems, generated programmatically.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Point2;

use crate::error::{Error, Result};
use crate::fem::{assemble_solve, BoundaryData, FemSolution, LoadCase, Material};
use crate::mesh::{BoundaryCondition, Mesh};

/// A mesh with its material and loading.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub mesh: Mesh,
    pub material: Material,
    pub loads: LoadCase,
}

impl Fixture {
    pub fn solve(&self) -> Result<FemSolution> {
        assemble_solve(&self.mesh, &self.material, &self.loads, 1)
    }

    /// Same problem on a uniformly refined mesh.
    pub fn refined(&self, levels: usize) -> Fixture {
        Fixture { mesh: self.mesh.refine_uniform(levels).mesh, ..self.clone() }
    }
}

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 4] = ["patch_test", "cantilever_sensor", "plate_with_hole_quarter", "two_triangle_shear"];

pub fn by_name(name: &str) -> Result<Fixture> {
    match name {
        "patch_test" => Ok(patch_test()),
        "cantilever_sensor" => Ok(cantilever_sensor()),
        "plate_with_hole_quarter" => Ok(plate_with_hole_quarter()),
        "two_triangle_shear" => Ok(two_triangle_shear()),
        other => Err(Error::Config(format!("unknown fixture '{other}' (known: {})", NAMES.join(", ")))),
    }
}

fn on(v: f64, target: f64) -> bool {
    (v - target).abs() < 1e-9 * (1.0 + target.abs())
}

/// Structured grid of `nx * ny` rectangles, each split along its rising diagonal.
pub fn rectangle_mesh(
    (x0, x1): (f64, f64),
    (y0, y1): (f64, f64),
    nx: usize,
    ny: usize,
    spec: &impl crate::mesh::BoundarySpec,
) -> Result<Mesh> {
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push(Point2::new(
                x0 + (x1 - x0) * i as f64 / nx as f64,
                y0 + (y1 - y0) * j as f64 / ny as f64,
            ));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut tris = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            tris.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            tris.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh::build(nodes, tris, spec)
}

/// Unit square, 4 x 4 grid, rollers on the left and bottom, unit tension on
/// the right, free top. The exact stress is uniaxial and constant.
pub fn patch_test() -> Fixture {
    let spec = |a: &Point2<f64>, b: &Point2<f64>| {
        Some(if on(a.x, 0.0) && on(b.x, 0.0) {
            BoundaryCondition::roller_x(0)
        } else if on(a.y, 0.0) && on(b.y, 0.0) {
            BoundaryCondition::roller_y(0)
        } else if on(a.x, 1.0) && on(b.x, 1.0) {
            BoundaryCondition::neumann(1)
        } else {
            BoundaryCondition::neumann(0)
        })
    };
    Fixture {
        name: "patch_test",
        mesh: rectangle_mesh((0.0, 1.0), (0.0, 1.0), 4, 4, &spec).expect("valid fixture"),
        material: Material::default(),
        loads: LoadCase {
            body_force: Default::default(),
            boundary: vec![BoundaryData::fixed(), BoundaryData::traction(1.0, 0.0)],
        },
    }
}

/// Beam `[0, 4] x [0, 1]` on a 16 x 4 grid, clamped at `x = 0` with a uniform
/// downward shear traction on the free end `x = 4`.
pub fn cantilever_sensor() -> Fixture {
    let spec = |a: &Point2<f64>, b: &Point2<f64>| {
        Some(if on(a.x, 0.0) && on(b.x, 0.0) {
            BoundaryCondition::dirichlet(0)
        } else if on(a.x, 4.0) && on(b.x, 4.0) {
            BoundaryCondition::neumann(1)
        } else {
            BoundaryCondition::neumann(0)
        })
    };
    Fixture {
        name: "cantilever_sensor",
        mesh: rectangle_mesh((0.0, 4.0), (0.0, 1.0), 16, 4, &spec).expect("valid fixture"),
        material: Material::default(),
        loads: LoadCase {
            body_force: Default::default(),
            boundary: vec![BoundaryData::fixed(), BoundaryData::traction(0.0, -1.0)],
        },
    }
}

/// Quarter of a plate `[0, 10] x [0, 7.5]` with a hole of radius 2.5 at the
/// origin, symmetry rollers on both cut lines and unit tension at `x = 10`.
///
/// The mesh joins two transfinite patches along the ray to the corner
/// `(10, 7.5)`, graded towards the hole.
pub fn plate_with_hole_quarter() -> Fixture {
    plate_with_hole_mesh(4, 4, 5)
}

fn plate_with_hole_mesh(na: usize, nb: usize, nr: usize) -> Fixture {
    let (w, h, r) = (10.0, 7.5, 2.5);
    let split = f64::atan2(h, w);
    let columns = na + nb + 1;
    let mut nodes = Vec::with_capacity(columns * (nr + 1));
    for j in 0..=nr {
        let s = j as f64 / nr as f64;
        let grade = s.powf(1.5);
        for i in 0..columns {
            let (theta, outer) = if i <= na {
                let u = i as f64 / na as f64;
                (split * u, Point2::new(w, h * u))
            } else {
                let u = (i - na) as f64 / nb as f64;
                (split + (FRAC_PI_2 - split) * u, Point2::new(w * (1.0 - u), h))
            };
            let inner = Point2::new(r * theta.cos(), r * theta.sin());
            nodes.push(inner + (outer - inner) * grade);
        }
    }
    let id = |i: usize, j: usize| j * columns + i;
    let mut tris = Vec::new();
    for j in 0..nr {
        for i in 0..columns - 1 {
            // angular index runs counterclockwise, radial index outward
            tris.push([id(i, j), id(i, j + 1), id(i + 1, j + 1)]);
            tris.push([id(i, j), id(i + 1, j + 1), id(i + 1, j)]);
        }
    }
    let spec = move |a: &Point2<f64>, b: &Point2<f64>| {
        Some(if on(a.x, 0.0) && on(b.x, 0.0) {
            BoundaryCondition::roller_x(0)
        } else if on(a.y, 0.0) && on(b.y, 0.0) {
            BoundaryCondition::roller_y(0)
        } else if on(a.x, w) && on(b.x, w) {
            BoundaryCondition::neumann(1)
        } else {
            BoundaryCondition::neumann(0)
        })
    };
    Fixture {
        name: "plate_with_hole_quarter",
        mesh: Mesh::build(nodes, tris, &spec).expect("valid fixture"),
        material: Material::default(),
        loads: LoadCase {
            body_force: Default::default(),
            boundary: vec![BoundaryData::fixed(), BoundaryData::traction(1.0, 0.0)],
        },
    }
}

/// Unit square split into triangles `[0, 1, 2]` and `[0, 2, 3]`, clamped on the
/// left, unit upward shear traction on the right, free top and bottom.
pub fn two_triangle_shear() -> Fixture {
    let spec = |a: &Point2<f64>, b: &Point2<f64>| {
        Some(if on(a.x, 0.0) && on(b.x, 0.0) {
            BoundaryCondition::dirichlet(0)
        } else if on(a.x, 1.0) && on(b.x, 1.0) {
            BoundaryCondition::neumann(1)
        } else {
            BoundaryCondition::neumann(0)
        })
    };
    let nodes = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(1.0, 1.0), Point2::new(0.0, 1.0)];
    Fixture {
        name: "two_triangle_shear",
        mesh: Mesh::build(nodes, vec![[0, 1, 2], [0, 2, 3]], &spec).expect("valid fixture"),
        material: Material::default(),
        loads: LoadCase {
            body_force: Default::default(),
            boundary: vec![BoundaryData::fixed(), BoundaryData::traction(0.0, 1.0)],
        },
    }
}
