//! Property tests of the full estimation pipeline on small random problems.

use crestim::fixtures::rectangle_mesh;
use crestim::*;
use nalgebra::{Matrix2, Point2, Vector2};
use proptest::prelude::*;

/// 3 x 2 grid on `[0, w] x [0, 1]`, clamped left, loaded right, free elsewhere.
fn beam(w: f64) -> Mesh {
    let spec = move |a: &Point2<f64>, b: &Point2<f64>| {
        Some(if a.x == 0.0 && b.x == 0.0 {
            BoundaryCondition::dirichlet(0)
        } else if a.x == w && b.x == w {
            BoundaryCondition::neumann(1)
        } else {
            BoundaryCondition::neumann(0)
        })
    };
    rectangle_mesh((0.0, w), (0.0, 1.0), 3, 2, &spec).unwrap()
}

fn loads(f: Vector2<f64>, grad: Matrix2<f64>, t: Vector2<f64>) -> LoadCase {
    LoadCase {
        body_force: AffineField { constant: f, gradient: grad },
        boundary: vec![BoundaryData::fixed(), BoundaryData::traction(t.x, t.y)],
    }
}

fn all_thetas(mesh: &Mesh, sol: &FemSolution) -> Vec<f64> {
    let opts = EstimatorOptions::default();
    let mut out = vec![estimate(mesh, sol, Method::Spet, CostFunction::J0, &opts).unwrap().theta];
    for m in [Method::Eet, Method::Eespt] {
        for c in CostFunction::ALL {
            out.push(estimate(mesh, sol, m, c, &opts).unwrap().theta);
        }
    }
    out
}

fn vec2() -> impl Strategy<Value = Vector2<f64>> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y)| Vector2::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn bound_holds_for_random_data(
        young in 0.5..5.0f64,
        poisson in 0.0..0.45f64,
        width in 1.0..3.0f64,
        f in vec2(),
        g in (vec2(), vec2()),
        t in vec2(),
    ) {
        let mesh = beam(width);
        let material = Material::new(young, poisson).unwrap();
        let lc = loads(f, Matrix2::from_columns(&[g.0, g.1]), t);
        let sol = assemble_solve(&mesh, &material, &lc, 1).unwrap();
        let r = reference_error(&mesh, &sol, 2).unwrap();
        for theta in all_thetas(&mesh, &sol) {
            prop_assert!(prager_synge_check(theta, r.global), "theta {theta} ref {}", r.global);
        }
    }

    #[test]
    fn estimates_scale_with_load_and_stiffness(s in 0.1..10.0f64, e in 0.2..5.0f64, t in vec2()) {
        prop_assume!(t.norm() > 0.1);
        let mesh = beam(2.0);
        let base = assemble_solve(&mesh, &Material::default(), &loads(Vector2::zeros(), Matrix2::zeros(), t), 1).unwrap();
        let scaled_load = assemble_solve(&mesh, &Material::default(), &loads(Vector2::zeros(), Matrix2::zeros(), t * s), 1).unwrap();
        let stiffer = assemble_solve(&mesh, &Material::new(e, 0.3).unwrap(), &loads(Vector2::zeros(), Matrix2::zeros(), t), 1).unwrap();
        let a = all_thetas(&mesh, &base);
        let b = all_thetas(&mesh, &scaled_load);
        let c = all_thetas(&mesh, &stiffer);
        for k in 0..a.len() {
            prop_assert!((b[k] - s * a[k]).abs() <= 1e-8 * b[k]);
            prop_assert!((c[k] - a[k] / e.sqrt()).abs() <= 1e-8 * a[k]);
        }
    }

    #[test]
    fn translation_does_not_change_estimates(dx in -50.0..50.0f64, dy in -50.0..50.0f64, f in vec2(), t in vec2()) {
        let mesh = beam(2.0);
        let moved = Mesh::build(
            mesh.nodes().iter().map(|p| Point2::new(p.x + dx, p.y + dy)).collect(),
            mesh.triangles().to_vec(),
            &|a: &Point2<f64>, b: &Point2<f64>| mesh.boundary_condition(
                mesh.find_edge(nearest(&mesh, a, dx, dy), nearest(&mesh, b, dx, dy)).unwrap()
            ),
        ).unwrap();
        let lc = loads(f, Matrix2::zeros(), t);
        let a = all_thetas(&mesh, &assemble_solve(&mesh, &Material::default(), &lc, 1).unwrap());
        let b = all_thetas(&moved, &assemble_solve(&moved, &Material::default(), &lc, 1).unwrap());
        for k in 0..a.len() {
            prop_assert!((a[k] - b[k]).abs() <= 1e-7 * a[k].max(1e-12), "{k}: {} vs {}", a[k], b[k]);
        }
    }
}

fn nearest(mesh: &Mesh, p: &Point2<f64>, dx: f64, dy: f64) -> usize {
    let q = Point2::new(p.x - dx, p.y - dy);
    (0..mesh.num_nodes()).min_by(|&i, &j| (mesh.node(i) - q).norm().total_cmp(&(mesh.node(j) - q).norm())).unwrap()
}
