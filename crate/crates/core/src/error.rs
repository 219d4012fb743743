use thiserror::Error;

/// Errors raised across the simulator and analysis pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("matrix is not positive semi-definite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("effect exceeds the identity (max eigenvalue {0})")]
    EffectAboveIdentity(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("shift register state must be nonzero")]
    ZeroRegisterState,

    #[error("time tags are not sorted at index {0}")]
    UnsortedTags(usize),

    #[error("slot edges must be strictly increasing")]
    OverlappingSlots,

    #[error("fringe fit failed: {0}")]
    FitFailed(String),

    #[error("setting {0} has no coincidences")]
    EmptySetting(String),

    #[error("design matrix is rank deficient (rank {0})")]
    RankDeficient(usize),

    #[error("maximum-likelihood search did not converge after {iterations} iterations")]
    NotConverged {
        iterations: usize,
        best: Box<crate::quantum::DensityMatrix>,
    },

    #[error("no calibration data: {0}")]
    EmptySample(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
