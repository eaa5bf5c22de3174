use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("quadrature order {order} outside the supported range [2, {max}]")]
    QuadratureOrder { order: usize, max: usize },

    #[error("degree {degree} exceeds the exactness of the quadrature (max {max})")]
    DegreeTooHigh { degree: usize, max: usize },

    #[error("asymptotic series diverges at s = {s}: term {k} exceeds term {prev}")]
    SeriesDivergent { s: f64, k: usize, prev: usize },

    #[error("operation not supported for this perturbation: {0}")]
    Unsupported(String),

    #[error("alpha blows up in finite time near s = {s}")]
    BlowupBranch { s: f64 },

    #[error("solution blew up at time {time}")]
    BlowupReached { time: f64 },

    #[error("non-finite value encountered at time {time}")]
    NonFinite { time: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("configuration error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam {
        field,
        reason: reason.into(),
    }
}
