use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: crestim::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn core(context: impl Into<String>, source: crestim::Error) -> Self {
        CliError::Core { context: context.into(), source }
    }

    /// 2 for invalid input, 3 for a numerical failure.
    pub fn exit_code(&self) -> i32 {
        use crestim::Error as E;
        match self {
            CliError::Validation(_) | CliError::Io { .. } => 2,
            CliError::Core { source, .. } => match source {
                E::SingularSystem { .. }
                | E::Compatibility { .. }
                | E::UnbalancedElement { .. }
                | E::NegativeReferenceEnergy(_) => 3,
                _ => 2,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
