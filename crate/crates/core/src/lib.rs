//! Guaranteed a posteriori error bounds for linear plane-stress finite
//! elements through equilibrated stress reconstruction.
//!
//! Three reconstructions are provided: element equilibration ([`eet`]),
//! star-patch equilibration ([`spet`]) and the hybrid of both ([`eespt`]).
//! Each yields a stress field whose distance to the finite element stress,
//! measured in the complementary energy norm, bounds the discretisation error.

pub mod basis;
pub mod eespt;
pub mod eet;
pub mod element_solve;
pub mod equil;
pub mod error;
pub mod estimator;
pub mod fem;
pub mod fixtures;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod reference;
pub mod spet;

pub use element_solve::{AdmissibleStress, Pinning};
pub use equil::{CostFunction, TractionField};
pub use error::{Error, Result};
pub use estimator::{effectivity, estimate, prager_synge_check, ErrorReport, Estimate, EstimatorOptions, Method};
pub use fem::{assemble_solve, AffineField, BoundaryData, FemSolution, LoadCase, Material, Stress};
pub use fixtures::Fixture;
pub use mesh::{BcKind, BoundaryCondition, BoundarySpec, EdgeTag, Mesh, Patch};
pub use reference::{reference_error, ReferenceError};
