use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("input out of domain: {0}")]
    InputDomain(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Measurements or time steps arrived out of order.
    #[error("ordering violation: {0}")]
    Ordering(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    /// Innovation covariance (or another matrix that must be inverted) is
    /// numerically singular.
    #[error("numerically degenerate matrix (reciprocal condition {rcond:.3e})")]
    Degenerate { rcond: f64 },
    #[error("time {t} s outside ground-truth span [{start}, {end}]")]
    OutOfSpan { t: f64, start: f64, end: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate geometry: {0}")]
    Geometry(String),
    #[error("solver did not converge after {iterations} iterations (last step {last_step:.3e} m)")]
    NonConvergence { iterations: usize, last_step: f64 },
}

impl Error {
    /// True for errors caused by missing or too little data rather than by
    /// malformed input.
    pub fn is_insufficient_data(&self) -> bool {
        matches!(self, Error::InsufficientData(_) | Error::OutOfSpan { .. })
    }
}
