//! Reference ("overkill") error from a solve on a nested, uniformly refined mesh.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{assemble_solve, element_strain, energy_norm, FemSolution};
use crate::mesh::Mesh;

/// Default number of uniform refinements of the reference mesh.
pub const DEFAULT_LEVELS: usize = 2;

/// Below `CANCELLATION * |u_ref|^2` the energy difference has lost more than half
/// of its significant digits and the direct value is reported instead.
pub const CANCELLATION: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct ReferenceError {
    /// Global error norm: the energy difference when it applies and is resolved, else `direct`.
    pub global: f64,
    /// Per coarse element, from direct integration; squares sum to `direct^2`.
    pub per_element: Vec<f64>,
    /// `sqrt(|u_ref|^2 - |u_h|^2)`, available for homogeneous displacement data.
    pub energy_difference: Option<f64>,
    /// `|u_ref - u_h|` integrated on the fine mesh.
    pub direct: f64,
    pub fine_elements: usize,
}

/// Error of `solution` measured against the solution on `mesh` refined `levels` times.
pub fn reference_error(mesh: &Mesh, solution: &FemSolution, levels: usize) -> Result<ReferenceError> {
    let refinement = mesh.refine_uniform(levels);
    let fine = &refinement.mesh;
    let reference = assemble_solve(fine, &solution.material, &solution.loads, solution.degree)?;
    let d = solution.material.stiffness();
    let coarse_strain: Vec<_> = (0..mesh.num_elements()).map(|e| solution.strain(mesh, e)).collect();
    let fine_sq: Vec<f64> = (0..fine.num_elements())
        .into_par_iter()
        .map(|e| {
            let diff = element_strain(fine, e, &reference.displacement) - coarse_strain[refinement.parent[e]];
            diff.dot(&(d * diff)) * fine.area(e)
        })
        .collect();
    let mut coarse_sq = vec![0.0; mesh.num_elements()];
    for (e, v) in fine_sq.iter().enumerate() {
        coarse_sq[refinement.parent[e]] += v;
    }
    let direct = coarse_sq.iter().sum::<f64>().sqrt();

    let mut resolved = None;
    let energy_difference = if solution.loads.homogeneous_dirichlet() {
        let r2 = energy_norm(fine, &solution.material, &reference.displacement).total.powi(2);
        let h2 = energy_norm(mesh, &solution.material, &solution.displacement).total.powi(2);
        let radicand = r2 - h2;
        if radicand < -1e-12 * r2.max(f64::MIN_POSITIVE) {
            return Err(Error::NegativeReferenceEnergy(radicand));
        }
        let ed = radicand.max(0.0).sqrt();
        if radicand > CANCELLATION * r2 {
            resolved = Some(ed);
        }
        Some(ed)
    } else {
        None
    };
    Ok(ReferenceError {
        global: resolved.unwrap_or(direct),
        per_element: coarse_sq.into_iter().map(f64::sqrt).collect(),
        energy_difference,
        direct,
        fine_elements: fine.num_elements(),
    })
}
