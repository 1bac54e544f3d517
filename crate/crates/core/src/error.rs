use thiserror::Error;

/// Errors raised by the solver and its kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PasaError {
    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("feasible set is empty (residual violation {violation:.3e})")]
    Infeasible { violation: f64 },

    #[error("projection did not converge within {iterations} working-set changes")]
    NonConvergence { iterations: usize },

    #[error("line search failed after {backtracks} backtracks")]
    LineSearchFailure { backtracks: usize },

    /// The search direction vanished: the point is stationary for the step map.
    #[error("search direction is zero")]
    ZeroDirection,

    #[error("affine system is inconsistent (residual {residual:.3e})")]
    Inconsistent { residual: f64 },
}

pub type Result<T> = std::result::Result<T, PasaError>;

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(PasaError::Dimension {
            context,
            expected,
            found,
        })
    }
}
