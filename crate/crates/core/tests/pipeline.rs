//! End-to-end runs on the built-in fixtures.

use crestim::fixtures;
use crestim::*;

#[test]
fn fixture_roster() {
    for name in fixtures::NAMES {
        let f = fixtures::by_name(name).unwrap();
        assert_eq!(f.name, name);
        f.loads.check(&f.mesh).unwrap();
    }
    assert!(matches!(fixtures::by_name("nope"), Err(Error::Config(_))));
}

#[test]
fn plate_rows_are_guaranteed() {
    let f = fixtures::plate_with_hole_quarter();
    let sol = f.solve().unwrap();
    let r = reference_error(&f.mesh, &sol, 1).unwrap();
    for c in CostFunction::ALL {
        let e = estimate(&f.mesh, &sol, Method::Eet, c, &EstimatorOptions::default()).unwrap();
        let report = effectivity(&e, &r);
        assert!(report.guaranteed(), "{}: eta {}", c.label(), report.eta);
        assert_eq!(report.cost_label(), c.label());
        assert_eq!(report.local_effectivity.len(), f.mesh.num_elements());
        let (lo, hi) = report.local_range().unwrap();
        assert!(lo > 0.0 && hi >= lo);
    }
}

#[test]
fn pinning_does_not_change_the_estimate() {
    let f = fixtures::cantilever_sensor();
    let sol = f.solve().unwrap();
    for m in [Method::Eet, Method::Eespt] {
        let a = estimate(&f.mesh, &sol, m, CostFunction::J2, &EstimatorOptions::default()).unwrap();
        let opts = EstimatorOptions { pinning: Pinning::L2Rigid, ..Default::default() };
        let b = estimate(&f.mesh, &sol, m, CostFunction::J2, &opts).unwrap();
        assert!((a.theta - b.theta).abs() <= 1e-10 * a.theta);
    }
}

#[test]
fn higher_local_degree_does_not_raise_the_estimate_much() {
    let f = fixtures::two_triangle_shear();
    let sol = f.solve().unwrap();
    let r = reference_error(&f.mesh, &sol, 2).unwrap();
    for k in 1..=3 {
        let opts = EstimatorOptions { k, ..Default::default() };
        let e = estimate(&f.mesh, &sol, Method::Eet, CostFunction::J0, &opts).unwrap();
        assert!(prager_synge_check(e.theta, r.global), "k = {k}");
    }
}

#[test]
fn refined_fixture_keeps_boundary_data() {
    let f = fixtures::cantilever_sensor();
    let g = f.refined(1);
    assert_eq!(g.mesh.num_elements(), 4 * f.mesh.num_elements());
    let a = f.solve().unwrap().strain_energy;
    let b = g.solve().unwrap().strain_energy;
    // compliance grows under refinement for traction loading
    assert!(b > a);
}
