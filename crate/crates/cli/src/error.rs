use hardy_bep::{BepError, ErrorCategory};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error(transparent)]
    Solver(#[from] BepError),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    /// 2 for validation, 3 for an infeasible bound, 4 for numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Solver(e) => match e.category() {
                ErrorCategory::Validation => 2,
                ErrorCategory::Infeasible => 3,
                ErrorCategory::Numerical => 4,
            },
        }
    }
}
