use thiserror::Error;

use crate::trace::SolveTrace;

/// Errors produced by the structure builders, linear algebra kernels and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// The line-search model has zero curvature along a descent direction.
    #[error("unbounded line search direction (slope {slope:e}, curvature {curvature:e})")]
    UnboundedDirection { slope: f64, curvature: f64 },

    #[error("iteration did not converge: {0}")]
    NotConverged(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// A non-finite objective appeared; the trace up to that point is preserved.
    #[error("solver diverged at iteration {iter}: {reason}")]
    Diverged {
        iter: usize,
        reason: String,
        trace: Box<SolveTrace>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            got,
        });
    }
    Ok(())
}
