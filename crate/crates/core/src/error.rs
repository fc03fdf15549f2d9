use thiserror::Error;

/// Errors raised by the verification toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An integer index (symmetric-function degree, dimension, ...) is outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),
    /// A mathematical hypothesis of a check does not hold for the given input.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// Input data is malformed (length mismatch, nonpositive parameter, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// The input is well formed but the requested route is not available for it.
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("unknown catalog entry: {0}")]
    UnknownCatalog(String),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
