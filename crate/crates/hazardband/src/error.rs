use thiserror::Error;

/// Errors surfaced while ingesting data, validating inputs, or running
/// resampling procedures.
#[derive(Debug, Error)]
pub enum HazardError {
    /// A malformed input row (wrong arity, unparsable number, missing header).
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    /// Input data or configuration violates a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A function argument lies outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The equal-precision weight g(s) = (s(1-s))^{-1/2} is undefined because
    /// the bootstrap variance vanishes at the interval start.
    #[error("degenerate weight: {0}")]
    DegenerateWeight(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HazardError>;
