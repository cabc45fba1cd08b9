use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum LmcError {
    /// Input outside the domain of an operation (non-symmetric matrix, negative step, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Dimension mismatch between operands.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// An iterative routine failed to reach its tolerance.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A kernel was asked for something its inputs cannot provide (e.g. a missing Hessian).
    #[error("capability error: {0}")]
    Capability(String),

    /// Invalid sampler or operator configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// The chain left the finite region.
    #[error("chain diverged at step {step}: {reason}")]
    Divergence { step: u64, reason: String },
}

pub type Result<T> = std::result::Result<T, LmcError>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(LmcError::Dimension { expected, got });
    }
    Ok(())
}
