//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Cholesky pivot failure; carries the index of the offending pivot.
    #[error("matrix not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    /// A numerical routine failed to converge or lost its bracket.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Result exceeds the representable f64 range.
    #[error("overflow in {0}")]
    Overflow(String),

    /// All optimizer starts failed.
    #[error("estimation failed: {0}")]
    Estimation(String),

    /// Invalid experiment configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Shape mismatch between operands.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
