use thiserror::Error;

/// Errors raised by the simulator.
///
/// Numerical failures (norm drift, positivity loss, ambiguous gauge
/// assignment) are distinguished from input validation so the CLI can map
/// them onto different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("requested Hilbert space dimension {dim} exceeds cap {cap}")]
    DimensionOverflow { dim: usize, cap: usize },

    #[error("Fock truncation inadequate: {0}")]
    TruncationInadequate(String),

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("time {t} outside schedule range [0, {total}]")]
    TimeOutOfRange { t: f64, total: f64 },

    #[error("state norm drifted by {drift:e} at step {step} (tolerance {tolerance:e})")]
    NormDrift { step: usize, drift: f64, tolerance: f64 },

    #[error("density matrix trace drifted by {drift:e} at step {step}")]
    TraceDrift { step: usize, drift: f64 },

    #[error("density matrix lost positivity: eigenvalue {min_eigenvalue:e} at step {step}")]
    PositivityViolation { step: usize, min_eigenvalue: f64 },

    #[error("ambiguous eigenstate assignment for level {level}: overlaps {best:.6} and {second:.6}")]
    AmbiguousGauge { level: usize, best: f64, second: f64 },

    #[error("eigenstate {index} has no definite parity (<P> = {expectation:.6})")]
    ParityUndefined { index: usize, expectation: f64 },

    #[error("eigensolver failed to converge")]
    NoConvergence,

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// Attach the name of the pipeline stage that produced this error.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// True for errors caused by bad inputs rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidParameter { .. }
            | Error::DimensionMismatch { .. }
            | Error::DimensionOverflow { .. }
            | Error::TruncationInadequate(_)
            | Error::TimeOutOfRange { .. } => true,
            Error::Stage { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
