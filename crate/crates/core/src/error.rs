use thiserror::Error;

/// Failure modes of the solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BepError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Gram matrix is ill-conditioned: condition estimate {condition:.3e} exceeds {limit:.1e}")]
    IllConditioned { condition: f64, limit: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(
        "constraint bound M = {requested} is not attainable: M0 ranges over ({lowest:.6e}, {highest:.6e}) on the search bracket"
    )]
    InfeasibleConstraint {
        requested: f64,
        lowest: f64,
        highest: f64,
    },

    #[error("{what} = {value} lies outside {domain}")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("calibration failed: best relative error {best_error:.3e} at order {best_order} (searched up to {max_order})")]
    CalibrationFailure {
        best_error: f64,
        best_order: usize,
        max_order: usize,
    },

    #[error("degenerate data: {0}")]
    Degenerate(String),
}

/// Coarse grouping used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Validation,
    Infeasible,
    Numerical,
}

impl BepError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            BepError::InvalidArgument(_) | BepError::OutOfDomain { .. } => {
                ErrorCategory::Validation
            }
            BepError::InfeasibleConstraint { .. } => ErrorCategory::Infeasible,
            BepError::IllConditioned { .. }
            | BepError::Numerical(_)
            | BepError::CalibrationFailure { .. }
            | BepError::Degenerate(_) => ErrorCategory::Numerical,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        BepError::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, BepError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categories() {
        assert_eq!(
            BepError::invalid("x").category(),
            ErrorCategory::Validation
        );
        let e = BepError::InfeasibleConstraint {
            requested: 1.0,
            lowest: 0.1,
            highest: 0.5,
        };
        assert_eq!(e.category(), ErrorCategory::Infeasible);
        assert!(e.to_string().contains("M = 1"));
        assert_eq!(
            BepError::Degenerate("flat".into()).category(),
            ErrorCategory::Numerical
        );
    }
}
