use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A measure or configuration failed validation.
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Work would exceed a configured cap.
    #[error("capacity exceeded: {what} (estimate {estimate:.3e}, cap {cap:.3e})")]
    Capacity { what: String, estimate: f64, cap: f64 },

    /// The simplex solver hit its pivot cap without an answer.
    #[error("solver stalled after {0} pivots")]
    SolverStall(usize),

    /// The operation does not apply to this kind of input.
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// A derived quantity is undefined (e.g. a ratio with zero denominator).
    #[error("undefined: {0}")]
    Undefined(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn capacity(what: impl Into<String>, estimate: f64, cap: f64) -> Self {
        Error::Capacity {
            what: what.into(),
            estimate,
            cap,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
