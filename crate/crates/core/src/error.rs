use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A specification failed validation.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// The relativistic rejection sampler hit its retry cap.
    #[error("rejection sampler exceeded {cap} attempts (acceptance ≈ exp(-m·dt) = {acceptance:.3e})")]
    RejectionCap { cap: usize, acceptance: f64 },
    /// Drift evaluated at the singular point.
    #[error("state sits on the singular set")]
    SingularState,
    /// The particle system lost all of its mass.
    #[error("particle system went extinct at epoch {epoch}")]
    Extinct { epoch: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("iteration did not converge: {0}")]
    NonConvergence(String),
}

impl Error {
    pub(crate) fn spec(msg: impl Into<String>) -> Self {
        Error::InvalidSpec(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
