//! Running a configured case: solve, estimate with every requested technique,
//! compare with the reference error and write the outputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crestim::{
    assemble_solve, effectivity, estimate, fixtures, reference_error, CostFunction, ErrorReport, Estimate,
    EstimatorOptions, FemSolution, LoadCase, Material, Mesh, Method, ReferenceError,
};

use crate::config::{CaseConfig, MeshSource};
use crate::error::{CliError, CliResult};
use crate::export::{export_fields, fmt_f64, report_fields};
use crate::meshfile::read_mesh;

/// Overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "CRESTIM_OUTPUT_DIR";

pub const TABLE_FILE: &str = "estimates.csv";
pub const TABLE_HEADER: &str = "method,cost,theta,ref_error,eta,cpu_normalized";

#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub mesh: Mesh,
    pub material: Material,
    pub loads: LoadCase,
}

/// Mesh, material and loads of a case, with the config overrides applied.
pub fn load_problem(config: &CaseConfig) -> CliResult<Problem> {
    let (name, mesh, material, loads) = match &config.mesh {
        MeshSource::Fixture(name) => {
            let f = fixtures::by_name(name).map_err(|e| CliError::Validation(e.to_string()))?;
            (name.clone(), f.mesh, f.material, f.loads)
        }
        MeshSource::File(path) => {
            let mesh = read_mesh(path)?;
            let name = path.file_stem().map_or("mesh".into(), |s| s.to_string_lossy().into_owned());
            (name, mesh, Material::default(), LoadCase { body_force: Default::default(), boundary: Vec::new() })
        }
    };
    let groups = (0..mesh.num_edges()).filter_map(|e| mesh.boundary_condition(e)).map(|b| b.group + 1).max().unwrap_or(0);
    let loads = config.loads.apply(&loads, groups);
    loads.check(&mesh).map_err(|e| CliError::core(name.clone(), e))?;
    let mesh = if config.refine > 0 { mesh.refine_uniform(config.refine).mesh } else { mesh };
    Ok(Problem { name, mesh, material: config.material.unwrap_or(material), loads })
}

/// One row of the comparison table.
#[derive(Debug, Clone)]
pub struct Row {
    pub report: ErrorReport,
    /// Median wall-clock of the repetitions.
    pub time: Duration,
    pub cpu_normalized: f64,
}

#[derive(Debug, Clone)]
pub struct CaseOutcome {
    pub problem: Problem,
    pub solution: FemSolution,
    pub reference: ReferenceError,
    pub rows: Vec<Row>,
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

pub fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2
    }
}

fn timed_estimate(problem: &Problem, sol: &FemSolution, m: Method, c: CostFunction, opts: &EstimatorOptions, reps: usize) -> CliResult<(Estimate, Duration)> {
    let mut times = Vec::with_capacity(reps);
    let mut last = None;
    for _ in 0..reps {
        let e = estimate(&problem.mesh, sol, m, c, opts).map_err(|e| {
            let cost = if m.uses_cost() { format!("/{}", c.label()) } else { String::new() };
            CliError::core(format!("{} {}{cost}", problem.name, m.label()), e)
        })?;
        times.push(e.timings.total());
        last = Some(e);
    }
    Ok((last.expect("at least one repetition"), median(times)))
}

/// `(method, cost)` pairs in table order; the star-patch technique appears once.
pub fn pairs(config: &CaseConfig) -> Vec<(Method, CostFunction)> {
    let mut out = Vec::new();
    for &m in &config.methods {
        if m.uses_cost() {
            out.extend(config.costs.iter().map(|&c| (m, c)));
        } else if !out.iter().any(|(x, _)| *x == m) {
            out.push((m, config.costs.first().copied().unwrap_or(CostFunction::J0)));
        }
    }
    out
}

pub fn output_dir(config: &CaseConfig) -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| config.output_dir.clone())
}

pub fn run_case(config: &CaseConfig) -> CliResult<CaseOutcome> {
    config.validate()?;
    let problem = load_problem(config)?;
    let ctx = |what: &str| format!("{} {what}", problem.name);
    let solution = assemble_solve(&problem.mesh, &problem.material, &problem.loads, 1).map_err(|e| CliError::core(ctx("solve"), e))?;
    let reference = reference_error(&problem.mesh, &solution, config.reference_levels).map_err(|e| CliError::core(ctx("reference"), e))?;
    let opts = EstimatorOptions { k: config.k, penalty: config.penalty, pinning: config.pinning };

    let mut raw = Vec::new();
    for (m, c) in pairs(config) {
        let (e, t) = timed_estimate(&problem, &solution, m, c, &opts, config.repetitions)?;
        raw.push((effectivity(&e, &reference), t));
    }
    // baseline: the traction technique with the same cost, timed separately if not requested
    let mut baselines: Vec<(CostFunction, Duration)> = raw
        .iter()
        .filter(|(r, _)| r.method == Method::Eet)
        .map(|(r, t)| (r.cost.expect("EET has a cost"), *t))
        .collect();
    if baselines.is_empty() {
        let c = config.costs.first().copied().unwrap_or(CostFunction::J0);
        let (_, t) = timed_estimate(&problem, &solution, Method::Eet, c, &opts, config.repetitions)?;
        baselines.push((c, t));
    }
    let rows = raw
        .into_iter()
        .map(|(report, time)| {
            let cpu_normalized = if report.method == Method::Eet {
                1.0
            } else {
                let base = report
                    .cost
                    .and_then(|c| baselines.iter().find(|(b, _)| *b == c))
                    .unwrap_or(&baselines[0])
                    .1;
                time.as_secs_f64() / base.as_secs_f64().max(1e-9)
            };
            Row { report, time, cpu_normalized }
        })
        .collect::<Vec<_>>();

    let dir = output_dir(config);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut files = Vec::new();
    let table = dir.join(TABLE_FILE);
    std::fs::write(&table, table_csv(&rows)).map_err(|e| CliError::io(&table, e))?;
    files.push(table);
    for row in &rows {
        let r = &row.report;
        let stem = format!("fields_{}_{}", r.method.label().to_lowercase(), r.cost_label().to_lowercase()).replace('-', "none");
        let title = format!("{} {} {}", problem.name, r.method.label(), r.cost_label());
        files.extend(export_fields(&dir, &stem, &problem.mesh, &title, &report_fields(&problem.mesh, r))?);
    }
    Ok(CaseOutcome { problem, solution, reference, rows, output_dir: dir, files })
}

pub fn table_csv(rows: &[Row]) -> String {
    let mut s = format!("{TABLE_HEADER}\n");
    for row in rows {
        let r = &row.report;
        writeln!(
            s,
            "{},{},{},{},{},{}",
            r.method.label(),
            r.cost_label(),
            fmt_f64(r.theta),
            fmt_f64(r.reference),
            fmt_f64(r.eta),
            fmt_f64(row.cpu_normalized)
        )
        .unwrap();
    }
    s
}

/// Human-readable summary printed by `run`.
pub fn summary(outcome: &CaseOutcome) -> String {
    let p = &outcome.problem;
    let mut s = String::new();
    writeln!(s, "case {}: {} elements, {} nodes", p.name, p.mesh.num_elements(), p.mesh.num_nodes()).unwrap();
    writeln!(s, "reference error {:.6e} ({} fine elements)", outcome.reference.global, outcome.reference.fine_elements).unwrap();
    writeln!(s, "{:<6} {:<4} {:>14} {:>9} {:>9} {:>17} {:>4}", "method", "cost", "theta", "eta", "cpu", "local eta", "ok").unwrap();
    for row in &outcome.rows {
        let r = &row.report;
        let local = r.local_range().map_or("-".to_string(), |(a, b)| format!("{a:.3}..{b:.3}"));
        writeln!(
            s,
            "{:<6} {:<4} {:>14.6e} {:>9.4} {:>9.3} {:>17} {:>4}",
            r.method.label(),
            r.cost_label(),
            r.theta,
            r.eta,
            row.cpu_normalized,
            local,
            if r.guaranteed() { "yes" } else { "NO" }
        )
        .unwrap();
    }
    writeln!(s, "outputs in {}", outcome.output_dir.display()).unwrap();
    s
}

/// Statistics printed by `mesh info`.
pub fn mesh_info(mesh: &Mesh) -> String {
    use std::collections::BTreeMap;
    let mut s = String::new();
    let boundary: Vec<usize> = (0..mesh.num_edges()).filter(|&e| mesh.is_boundary_edge(e)).collect();
    writeln!(s, "nodes     {}", mesh.num_nodes()).unwrap();
    writeln!(s, "elements  {}", mesh.num_elements()).unwrap();
    writeln!(s, "edges     {} ({} on the boundary)", mesh.num_edges(), boundary.len()).unwrap();
    writeln!(s, "area      {:.6}", mesh.total_area()).unwrap();
    writeln!(s, "h_max     {:.6}", mesh.max_edge_length()).unwrap();
    let mut groups: BTreeMap<(usize, String), usize> = BTreeMap::new();
    for &e in &boundary {
        let bc = mesh.boundary_condition(e).expect("tagged");
        *groups.entry((bc.group, format!("{:?}", bc.kinds))).or_default() += 1;
    }
    for ((g, kinds), n) in groups {
        writeln!(s, "group {g}   {kinds}: {n} edges").unwrap();
    }
    s
}

pub fn fixtures_list() -> String {
    let mut s = String::new();
    for name in fixtures::NAMES {
        let f = fixtures::by_name(name).expect("built-in fixture");
        writeln!(s, "{name:<26} {:>5} elements {:>5} nodes", f.mesh.num_elements(), f.mesh.num_nodes()).unwrap();
    }
    s
}

pub fn run_config_file(path: &Path) -> CliResult<CaseOutcome> {
    run_case(&CaseConfig::from_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_three_and_four() {
        let d = |ms| Duration::from_millis(ms);
        assert_eq!(median(vec![d(5), d(1), d(3)]), d(3));
        assert_eq!(median(vec![d(4), d(1), d(3), d(2)]), Duration::from_micros(2500));
    }

    #[test]
    fn pairs_list_spet_once() {
        let mut c = CaseConfig::new(MeshSource::Fixture("patch_test".into()));
        c.methods = vec![Method::Spet, Method::Eet];
        c.costs = vec![CostFunction::J1, CostFunction::J2];
        assert_eq!(pairs(&c), vec![(Method::Spet, CostFunction::J1), (Method::Eet, CostFunction::J1), (Method::Eet, CostFunction::J2)]);
    }

    #[test]
    fn unknown_fixture_is_a_validation_error() {
        let c = CaseConfig::new(MeshSource::Fixture("nope".into()));
        assert_eq!(load_problem(&c).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn patch_test_rows_are_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = CaseConfig::new(MeshSource::Fixture("patch_test".into()));
        c.output_dir = dir.path().to_path_buf();
        c.repetitions = 1;
        c.costs = vec![CostFunction::J0];
        let out = run_case(&c).unwrap();
        assert_eq!(out.rows.len(), 3);
        for r in &out.rows {
            assert!(r.report.theta <= 1e-9, "{}", r.report.method.label());
        }
        let eet = out.rows.iter().find(|r| r.report.method == Method::Eet).unwrap();
        assert_eq!(eet.cpu_normalized, 1.0);
        assert!(dir.path().join(TABLE_FILE).exists());
        assert!(dir.path().join("fields_spet_none.vtk").exists());
        assert!(dir.path().join("fields_eet_j0.csv").exists());
    }
}
