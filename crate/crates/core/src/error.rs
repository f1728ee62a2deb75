use thiserror::Error;

/// Errors raised by problem construction, solvers and data loading.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {quantity}")]
    NonFinite { quantity: String },

    #[error(
        "hessian is singular or too ill-conditioned: residual {residual:.3e} exceeds tolerance {tolerance:.3e}; \
         add regularization (e.g. use a ridge problem with lambda > 0)"
    )]
    SingularHessian { residual: f64, tolerance: f64 },

    #[error("dimension {d} exceeds the materialization cap {cap}; supply mu explicitly")]
    DimensionCap { d: usize, cap: usize },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("iterate became non-finite at epoch {epoch}, step {step}")]
    Diverged { epoch: u64, step: u64 },

    #[error("{method} requires a ridge-form problem with a response vector")]
    UnsupportedProblem { method: &'static str },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
