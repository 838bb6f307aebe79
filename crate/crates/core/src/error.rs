use thiserror::Error;

/// Errors produced by the simulator, estimators and optimizers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("register of {n} atoms exceeds the state-vector cap of {cap}")]
    Capacity { n: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Bloch vector length {0:e} is too small to define squeezing")]
    DegenerateBlochVector(f64),

    #[error("unstable estimate: {excluded} of {total} repeats had a degenerate denominator")]
    UnstableEstimate { excluded: usize, total: usize },

    #[error("numerical instability: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
