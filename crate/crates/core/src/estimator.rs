//! Constitutive relation error, the Prager-Synge check and effectivity indices.

use std::time::{Duration, Instant};

use crate::eespt::{eespt_tractions, DEFAULT_PENALTY};
use crate::eet::eet_tractions;
use crate::element_solve::{solve_elements, AdmissibleStress, Pinning};
use crate::equil::{CostFunction, TractionField};
use crate::error::Result;
use crate::fem::{complementary_norm, FemSolution, NormMap};
use crate::mesh::Mesh;
use crate::reference::ReferenceError;
use crate::spet::spet_estimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Eet,
    Spet,
    Eespt,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Eet, Method::Spet, Method::Eespt];

    pub fn label(&self) -> &'static str {
        match self {
            Method::Eet => "EET",
            Method::Spet => "SPET",
            Method::Eespt => "EESPT",
        }
    }

    /// Whether the method minimises a traction cost function.
    pub fn uses_cost(&self) -> bool {
        !matches!(self, Method::Spet)
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "eet" => Ok(Method::Eet),
            "spet" => Ok(Method::Spet),
            "eespt" => Ok(Method::Eespt),
            other => Err(format!("unknown method '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOptions {
    /// Extra degree of the element solves.
    pub k: usize,
    pub penalty: f64,
    pub pinning: Pinning,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self { k: 3, penalty: DEFAULT_PENALTY, pinning: Pinning::MeanValue }
    }
}

/// Wall-clock time per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    /// Traction construction or patch solves.
    pub construction: Duration,
    pub element_solves: Duration,
    pub cre: Duration,
}

impl PhaseTimings {
    pub fn total(&self) -> Duration {
        self.construction + self.element_solves + self.cre
    }
}

/// Output of one estimator run.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub method: Method,
    pub cost: Option<CostFunction>,
    pub theta: f64,
    pub contributions: Vec<f64>,
    pub stress: AdmissibleStress,
    pub tractions: Option<TractionField>,
    pub timings: PhaseTimings,
}

/// `|| sigma_hat - K eps(u_h) ||` globally and per element.
pub fn cre(mesh: &Mesh, solution: &FemSolution, admissible: &AdmissibleStress) -> Result<NormMap> {
    let exactness = 2 * admissible.degree();
    complementary_norm(mesh, &solution.material, exactness, |e, l| admissible.stress(mesh, e, l) - solution.stress[e])
}

/// Runs one technique. `cost` is ignored by the star-patch technique.
pub fn estimate(
    mesh: &Mesh,
    solution: &FemSolution,
    method: Method,
    cost: CostFunction,
    options: &EstimatorOptions,
) -> Result<Estimate> {
    let mut timings = PhaseTimings::default();
    let start = Instant::now();
    let (stress, tractions) = match method {
        Method::Spet => {
            let r = spet_estimate(mesh, solution)?;
            timings.construction = start.elapsed();
            (r.stress, None)
        }
        Method::Eet | Method::Eespt => {
            let t = if method == Method::Eet {
                eet_tractions(mesh, solution, cost)?
            } else {
                eespt_tractions(mesh, solution, cost, options.penalty)?
            };
            timings.construction = start.elapsed();
            let s = Instant::now();
            let stress = solve_elements(mesh, solution, &t, options.k, options.pinning)?;
            timings.element_solves = s.elapsed();
            (stress, Some(t))
        }
    };
    let s = Instant::now();
    let norms = cre(mesh, solution, &stress)?;
    timings.cre = s.elapsed();
    Ok(Estimate {
        method,
        cost: method.uses_cost().then_some(cost),
        theta: norms.total,
        contributions: norms.per_element,
        stress,
        tractions,
        timings,
    })
}

/// `theta >= reference (1 - 1e-9)`.
pub fn prager_synge_check(theta: f64, reference_error: f64) -> bool {
    theta >= reference_error * (1.0 - 1e-9)
}

/// Estimate compared with the reference error.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub method: Method,
    pub cost: Option<CostFunction>,
    pub theta: f64,
    pub reference: f64,
    pub eta: f64,
    pub contributions: Vec<f64>,
    pub reference_contributions: Vec<f64>,
    /// `None` where the reference contribution is negligible.
    pub local_effectivity: Vec<Option<f64>>,
    pub timings: PhaseTimings,
}

impl ErrorReport {
    pub fn cost_label(&self) -> &'static str {
        self.cost.map_or("-", |c| c.label())
    }

    pub fn guaranteed(&self) -> bool {
        prager_synge_check(self.theta, self.reference)
    }

    /// Smallest and largest defined local effectivity.
    pub fn local_range(&self) -> Option<(f64, f64)> {
        let defined: Vec<f64> = self.local_effectivity.iter().flatten().copied().collect();
        if defined.is_empty() {
            return None;
        }
        Some((defined.iter().copied().fold(f64::INFINITY, f64::min), defined.iter().copied().fold(0.0, f64::max)))
    }
}

/// Relative cutoff below which an element's reference error is treated as zero.
pub const LOCAL_CUTOFF: f64 = 1e-14;

pub fn local_effectivity(contributions: &[f64], reference: &[f64]) -> Vec<Option<f64>> {
    let max = reference.iter().copied().fold(0.0, f64::max);
    contributions
        .iter()
        .zip(reference)
        .map(|(c, r)| (max > 0.0 && *r >= LOCAL_CUTOFF * max).then(|| c / r))
        .collect()
}

pub fn effectivity(estimate: &Estimate, reference: &ReferenceError) -> ErrorReport {
    ErrorReport {
        method: estimate.method,
        cost: estimate.cost,
        theta: estimate.theta,
        reference: reference.global,
        eta: estimate.theta / reference.global,
        contributions: estimate.contributions.clone(),
        reference_contributions: reference.per_element.clone(),
        local_effectivity: local_effectivity(&estimate.contributions, &reference.per_element),
        timings: estimate.timings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn bound_check() {
        assert!(prager_synge_check(1.0, 1.0));
        assert!(prager_synge_check(812.999, 347.997));
        assert!(!prager_synge_check(0.99, 1.0));
        let eta: f64 = 556.629 / 347.997;
        assert!((eta - 1.5995).abs() < 5e-5);
    }

    #[test]
    fn local_indices() {
        let l = local_effectivity(&[2.0, 2.0, 2.0], &[1.0, 1.0, 1.0]);
        assert!(l.iter().all(|v| *v == Some(2.0)));
        let l = local_effectivity(&[1.0, 1.0], &[1.0, 1e-15]);
        assert_eq!(l, vec![Some(1.0), None]);
    }

    #[test]
    fn no_correction_gives_zero() {
        let f = fixtures::cantilever_sensor();
        let sol = f.solve().unwrap();
        let r = spet_estimate(&f.mesh, &sol).unwrap();
        let mut s = r.stress.clone();
        for c in &mut s.correction {
            c.fill(0.0);
        }
        assert_eq!(cre(&f.mesh, &sol, &s).unwrap().total, 0.0);
    }

    #[test]
    fn patch_test_all_methods() {
        let f = fixtures::patch_test();
        let sol = f.solve().unwrap();
        for m in Method::ALL {
            let e = estimate(&f.mesh, &sol, m, CostFunction::J0, &EstimatorOptions::default()).unwrap();
            assert!(e.theta <= 1e-9, "{}: {}", m.label(), e.theta);
        }
    }

    #[test]
    fn contributions_add_up() {
        let f = fixtures::two_triangle_shear();
        let sol = f.solve().unwrap();
        for m in Method::ALL {
            let e = estimate(&f.mesh, &sol, m, CostFunction::J2, &EstimatorOptions::default()).unwrap();
            let s: f64 = e.contributions.iter().map(|c| c * c).sum();
            assert!((s - e.theta.powi(2)).abs() <= 1e-12 * s);
        }
    }
}
