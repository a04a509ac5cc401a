use thiserror::Error;

/// Errors raised by design construction, simulation and file parsing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("item index {item} out of range 1..={n}")]
    ItemOutOfRange { item: u64, n: u64 },

    #[error("n = {0} is not a power of two")]
    NotPowerOfTwo(u64),

    #[error("probability {name} = {value} outside {range}")]
    InvalidProbability {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("fixed-point iteration did not converge after {iterations} steps (last iterate {last:e})")]
    NonConvergence { iterations: usize, last: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
