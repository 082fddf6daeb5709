//! Acceptance criteria 1-8. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::{Duration, Instant};

use crestim::basis::TriangleBasis;
use crestim::eespt::{self, DEFAULT_PENALTY};
use crestim::eet;
use crestim::equil::{max_element_imbalance, neumann_mismatch};
use crestim::fem::{energy_norm, stress_dot};
use crestim::fixtures::{self, Fixture};
use crestim::quadrature::gauss_legendre;
use crestim::spet::{self, element_basis, PATCH_DEGREE};
use crestim::*;
use nalgebra::{DMatrix, DVector, Matrix2, Point2, Vector2};

const REFERENCE_LEVELS: usize = 2;
/// Relative size, against the energy norm of the solution, below which a norm is rounding noise.
const RESOLUTION: f64 = 1e-12;

struct Run {
    fixture: Fixture,
    solution: FemSolution,
    energy: f64,
    reference: ReferenceError,
    estimates: Vec<Estimate>,
    elapsed: Duration,
}

impl Run {
    fn new(fixture: Fixture) -> Run {
        let start = Instant::now();
        let solution = fixture.solve().expect("fe solve");
        let energy = energy_norm(&fixture.mesh, &fixture.material, &solution.displacement).total;
        let reference = reference_error(&fixture.mesh, &solution, REFERENCE_LEVELS).expect("reference");
        let opts = EstimatorOptions::default();
        let mut estimates = vec![estimate(&fixture.mesh, &solution, Method::Spet, CostFunction::J0, &opts).expect("spet")];
        for m in [Method::Eet, Method::Eespt] {
            for c in CostFunction::ALL {
                estimates.push(estimate(&fixture.mesh, &solution, m, c, &opts).expect("estimate"));
            }
        }
        Run { fixture, solution, energy, reference, estimates, elapsed: start.elapsed() }
    }

    fn get(&self, m: Method, c: CostFunction) -> &Estimate {
        self.estimates.iter().find(|e| e.method == m && (e.cost.is_none() || e.cost == Some(c))).unwrap()
    }

    fn label(e: &Estimate) -> String {
        match e.cost {
            Some(c) => format!("{}/{}", e.method.label(), c.label()),
            None => e.method.label().to_string(),
        }
    }
}

type Outcome = Result<String, String>;

fn criterion_1(runs: &[Run]) -> Outcome {
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    let mut time = Duration::ZERO;
    for run in runs.iter().filter(|r| r.fixture.name != "two_triangle_shear") {
        time += run.elapsed;
        for e in &run.estimates {
            let r = run.reference.global;
            // both sides below the resolution of the energy norm are zeros in exact arithmetic
            let floor = RESOLUTION * run.energy;
            if !prager_synge_check(e.theta, r) && !(e.theta <= floor && r <= floor) {
                failures.push(format!("{} {}: theta {:.3e} < ref {:.3e}", run.fixture.name, Run::label(e), e.theta, r));
            }
            if r > floor {
                worst = worst.min(e.theta / r);
            }
        }
    }
    if time > Duration::from_secs(120) {
        failures.push(format!("runtime {:.1}s exceeds 120s", time.as_secs_f64()));
    }
    if failures.is_empty() {
        Ok(format!("min theta/ref = {worst:.4}, runtime {:.2}s", time.as_secs_f64()))
    } else {
        Err(failures.join("; "))
    }
}

fn criterion_2(runs: &[Run]) -> Outcome {
    let run = runs.iter().find(|r| r.fixture.name == "patch_test").unwrap();
    let limit = 1e-9 * run.energy;
    let mut msg = Vec::new();
    let mut ok = run.reference.global <= 1e-10;
    msg.push(format!("ref {:.2e}", run.reference.global));
    for m in Method::ALL {
        let t = run.get(m, CostFunction::J0).theta;
        ok &= t <= limit;
        msg.push(format!("{} {:.2e}", m.label(), t));
    }
    let s = format!("{} (limit {:.2e})", msg.join(", "), limit);
    if ok { Ok(s) } else { Err(s) }
}

fn criterion_3(runs: &[Run]) -> Outcome {
    let mut imb: f64 = 0.0;
    let mut eet_mis: f64 = 0.0;
    let mut eespt_mis: f64 = 0.0;
    for run in runs {
        let (mesh, sol) = (&run.fixture.mesh, &run.solution);
        for e in run.estimates.iter().filter(|e| e.tractions.is_some()) {
            let t = e.tractions.as_ref().unwrap();
            imb = imb.max(max_element_imbalance(mesh, t, &sol.loads));
            let mis = neumann_mismatch(mesh, sol, t);
            if e.method == Method::Eet {
                eet_mis = eet_mis.max(mis);
            } else {
                eespt_mis = eespt_mis.max(mis);
            }
        }
    }
    let s = format!("imbalance {imb:.2e}, Neumann mismatch EET {eet_mis:.2e} EESPT {eespt_mis:.2e}");
    if imb <= 1e-9 && eet_mis <= 1e-12 && eespt_mis <= 1e-4 { Ok(s) } else { Err(s) }
}

/// `argmin 1/2 (x - t)^T H (x - t)` subject to `C x = d`, by the null-space
/// method on a singular value decomposition. `C` may be rank deficient as long
/// as the constraints are consistent.
fn lsq_oracle(h: &DMatrix<f64>, t: &DVector<f64>, c: &DMatrix<f64>, d: &DVector<f64>) -> DVector<f64> {
    let n = c.ncols();
    let svd = c.clone().svd(true, true);
    let x0 = svd.solve(d, 1e-12 * svd.singular_values.max()).unwrap();
    // complete the row space of C to an orthonormal basis through its Gram matrix
    let gram = c.transpose() * c;
    let eig = gram.symmetric_eigen();
    let tol = 1e-12 * eig.eigenvalues.amax().max(1e-300);
    let cols: Vec<_> = (0..n).filter(|&i| eig.eigenvalues[i] <= tol).map(|i| eig.eigenvectors.column(i).into_owned()).collect();
    if cols.is_empty() {
        return x0;
    }
    let z = DMatrix::from_columns(&cols);
    let lhs = z.transpose() * h * &z;
    let rhs = z.transpose() * h * (t - &x0);
    let y = lhs.cholesky().expect("H positive on the null space").solve(&rhs);
    x0 + z * y
}

fn rel_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax() / a.amax().max(b.amax()).max(f64::MIN_POSITIVE)
}

/// Reference-coordinate Duffy rule with `n x n` points.
fn duffy(n: usize) -> Vec<([f64; 2], f64)> {
    let (x, w) = gauss_legendre(n);
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let u = (x[i] + 1.0) / 2.0;
            let v = (x[j] + 1.0) / 2.0;
            out.push(([u, v * (1.0 - u)], w[i] * w[j] / 4.0 * (1.0 - u)));
        }
    }
    out
}

/// SPET right-hand side of vertex `i` integrated from scratch in reference coordinates.
fn spet_rhs_oracle(mesh: &Mesh, sol: &FemSolution, vertex: usize, space: &spet::PatchSpace, fixed: &[bool]) -> DVector<f64> {
    let mut rhs = DVector::zeros(2 * space.num_scalar);
    let rule = duffy(12);
    let (gx, gw) = gauss_legendre(12);
    for (pos, &e) in space.elements.iter().enumerate() {
        let basis: TriangleBasis = element_basis(mesh, e, PATCH_DEGREE).unwrap();
        let [p0, p1, p2] = mesh.vertices(e);
        let jac = Matrix2::from_columns(&[p1 - p0, p2 - p0]);
        let det = jac.determinant().abs();
        let jinv_t = jac.try_inverse().unwrap().transpose();
        let a = mesh.local_vertex(e, vertex).unwrap();
        let lam = |p: [f64; 2]| [1.0 - p[0] - p[1], p[0], p[1]][a];
        let dlam = [Vector2::new(-1.0, -1.0), Vector2::new(1.0, 0.0), Vector2::new(0.0, 1.0)][a];
        let map = &space.local_to_patch[pos];
        let sigma = sol.stress[e];
        let mut local = vec![Vector2::zeros(); basis.len()];
        for (p, w) in &rule {
            let (v, g) = basis.eval(*p);
            let x = p0 + jac * Vector2::new(p[0], p[1]);
            let f = sol.loads.body_force.eval(&x);
            for j in 0..basis.len() {
                let dref = Vector2::new(g[j][0], g[j][1]) * lam(*p) + dlam * v[j];
                let grad = jinv_t * dref;
                local[j] += (f * (lam(*p) * v[j]) - stress_dot(&sigma, &grad)) * (w * det);
            }
        }
        let corners = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        for k in 0..3 {
            let edge = mesh.element_edges(e)[k];
            if mesh.boundary_condition(edge).is_none() {
                continue;
            }
            let (s0, s1) = (corners[k], corners[(k + 1) % 3]);
            let len = (mesh.vertices(e)[(k + 1) % 3] - mesh.vertices(e)[k]).norm();
            for q in 0..gx.len() {
                let t = (gx[q] + 1.0) / 2.0;
                let p = [s0[0] + t * (s1[0] - s0[0]), s0[1] + t * (s1[1] - s0[1])];
                let (v, _) = basis.eval(p);
                let x: Point2<f64> = p0 + jac * Vector2::new(p[0], p[1]);
                let fd = sol.loads.neumann_traction(mesh, edge, &x);
                for j in 0..basis.len() {
                    local[j] += fd * (gw[q] / 2.0 * len * lam(p) * v[j]);
                }
            }
        }
        for j in 3..basis.len() {
            for c in 0..2 {
                rhs[2 * map[j] + c] += local[j][c];
            }
        }
    }
    for (r, &f) in fixed.iter().enumerate() {
        if f {
            rhs[r] = 0.0;
        }
    }
    rhs
}

fn criterion_4() -> Outcome {
    let f = fixtures::two_triangle_shear();
    let sol = f.solve().unwrap();
    let mesh = &f.mesh;
    let (mut eet_err, mut eespt_err, mut spet_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for cost in CostFunction::ALL {
        for i in 0..mesh.num_nodes() {
            let s = eet::build_node_system(mesh, &sol, i, cost).unwrap();
            let x = eet::solve_node_system(&s).unwrap();
            let (c, d) = s.constraints();
            eet_err = eet_err.max(rel_diff(&x, &lsq_oracle(&s.weight, &s.target, &c, &d)));

            let p = eespt::build_patch_system(mesh, &sol, i, cost, DEFAULT_PENALTY).unwrap();
            let y = eespt::solve_patch_system(&p).unwrap();
            let (c, d) = p.constraints();
            eespt_err = eespt_err.max(rel_diff(&y, &lsq_oracle(&p.penalty, &p.target, &c, &d)));
        }
    }
    for i in 0..mesh.num_nodes() {
        let s = spet::build_patch_system(mesh, &sol, i).unwrap();
        let oracle = spet_rhs_oracle(mesh, &sol, i, &s.space, &s.fixed);
        spet_err = spet_err.max(rel_diff(&s.rhs, &oracle));
    }
    let s = format!("EET {eet_err:.2e}, EESPT {eespt_err:.2e}, SPET rhs {spet_err:.2e}");
    if eet_err <= 1e-9 && eespt_err <= 1e-9 && spet_err <= 1e-10 { Ok(s) } else { Err(s) }
}

fn criterion_5(runs: &[Run]) -> Outcome {
    let mut ok = true;
    let mut msg = Vec::new();
    for run in runs.iter().filter(|r| matches!(r.fixture.name, "cantilever_sensor" | "plate_with_hole_quarter")) {
        let eta = |e: &Estimate| e.theta / run.reference.global;
        let spet = eta(run.get(Method::Spet, CostFunction::J0));
        let others: Vec<f64> = run.estimates.iter().filter(|e| e.method != Method::Spet).map(eta).collect();
        let min_other = others.iter().copied().fold(f64::INFINITY, f64::min);
        ok &= spet >= 1.0 && spet <= min_other;
        msg.push(format!("{}: SPET {spet:.3}, min EET/EESPT {min_other:.3}", run.fixture.name));
    }
    let s = msg.join("; ");
    if ok { Ok(s) } else { Err(s) }
}

fn slope(h: &[f64], v: &[f64]) -> f64 {
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = v.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn criterion_6() -> Outcome {
    // gravity loading with a free end
    let mut base = fixtures::cantilever_sensor();
    base.loads = LoadCase { body_force: AffineField::constant(0.0, -1.0), boundary: vec![BoundaryData::fixed(), BoundaryData::traction(0.0, 0.0)] };
    let opts = EstimatorOptions::default();
    let mut h = Vec::new();
    let mut refs = Vec::new();
    let mut thetas: Vec<Vec<f64>> = vec![Vec::new(); 3];
    for level in 0..=3 {
        let f = base.refined(level);
        let sol = f.solve().unwrap();
        h.push(f.mesh.max_edge_length());
        refs.push(reference_error(&f.mesh, &sol, REFERENCE_LEVELS).unwrap().global);
        for (k, m) in Method::ALL.iter().enumerate() {
            thetas[k].push(estimate(&f.mesh, &sol, *m, CostFunction::J0, &opts).unwrap().theta);
        }
    }
    let ref_slope = slope(&h, &refs);
    let mut ok = true;
    let mut msg = vec![format!("ref slope {ref_slope:.3}")];
    for (k, m) in Method::ALL.iter().enumerate() {
        let s = slope(&h, &thetas[k]);
        let etas: Vec<f64> = thetas[k].iter().zip(&refs).map(|(t, r)| t / r).collect();
        let spread = etas.iter().copied().fold(0.0, f64::max) / etas.iter().copied().fold(f64::INFINITY, f64::min);
        let ratio = s / ref_slope;
        ok &= (ratio - 1.0).abs() <= 0.15 && spread < 1.5;
        msg.push(format!("{} slope {s:.3} (ratio {ratio:.3}), eta spread {spread:.3}", m.label()));
    }
    let s = msg.join("; ");
    if ok { Ok(s) } else { Err(s) }
}

fn criterion_7(runs: &[Run]) -> Outcome {
    let run = runs.iter().find(|r| r.fixture.name == "cantilever_sensor").unwrap();
    let mut ok = true;
    let mut msg = Vec::new();
    for m in [Method::Eet, Method::Eespt] {
        for c in CostFunction::ALL {
            ok &= prager_synge_check(run.get(m, c).theta, run.reference.global);
        }
        let t0 = run.get(m, CostFunction::J0).theta;
        let t2 = run.get(m, CostFunction::J2).theta;
        let d = (t2 - t0).abs() / t0;
        ok &= d <= 0.15;
        msg.push(format!("{} |J2-J0|/J0 = {d:.4}", m.label()));
    }
    let s = msg.join(", ");
    if ok { Ok(s) } else { Err(s) }
}

fn criterion_8(runs: &[Run]) -> Outcome {
    let mut additivity: f64 = 0.0;
    let mut agreement: f64 = 0.0;
    for run in runs {
        for e in &run.estimates {
            let s: f64 = e.contributions.iter().map(|c| c * c).sum();
            additivity = additivity.max((s - e.theta.powi(2)).abs() / e.theta.powi(2).max(f64::MIN_POSITIVE));
        }
        // on the patch test both reference formulas vanish and no relative comparison exists
        if run.fixture.name != "patch_test" {
            let ed = run.reference.energy_difference.expect("homogeneous displacement data");
            agreement = agreement.max((ed - run.reference.direct).abs() / run.reference.direct);
        }
    }
    let s = format!("additivity {additivity:.2e}, reference formulas {agreement:.2e}");
    if additivity <= 1e-12 && agreement <= 1e-10 { Ok(s) } else { Err(s) }
}

fn main() {
    let runs: Vec<Run> = fixtures::NAMES.iter().map(|n| Run::new(fixtures::by_name(n).unwrap())).collect();
    let results = [
        criterion_1(&runs),
        criterion_2(&runs),
        criterion_3(&runs),
        criterion_4(),
        criterion_5(&runs),
        criterion_6(),
        criterion_7(&runs),
        criterion_8(&runs),
    ];
    let mut failed = 0;
    for (k, r) in results.iter().enumerate() {
        match r {
            Ok(s) => println!("criterion {}: PASS  {s}", k + 1),
            Err(s) => {
                failed += 1;
                println!("criterion {}: FAIL  {s}", k + 1)
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
