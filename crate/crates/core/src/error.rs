//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("kernel matrix is not positive definite (jitter {jitter:e} insufficient)")]
    NotPositiveDefinite { jitter: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("control input outside the control domain at step {step}")]
    ControlOutOfDomain { step: usize },

    #[error("state estimate left the compact state box at step {step}; the consistency budget no longer applies")]
    StateOutsideDomain { step: usize },

    #[error("Riccati iteration did not converge after {iterations} iterations")]
    RiccatiDivergence { iterations: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed CSV row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dims(context: &'static str, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            found,
        }
    }
}
