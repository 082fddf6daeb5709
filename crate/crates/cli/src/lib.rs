//! Configuration, orchestration and output of estimator comparison runs.

pub mod config;
pub mod error;
pub mod export;
pub mod meshfile;
pub mod run;

pub use config::{CaseConfig, MeshSource};
pub use error::{CliError, CliResult};
pub use run::{run_case, CaseOutcome};
