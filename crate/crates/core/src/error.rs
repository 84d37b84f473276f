use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid protograph: {0}")]
    InvalidProtograph(String),
    #[error("lifting failed: {0}")]
    Lifting(String),
    #[error("code dimension {available} is smaller than the {required}-bit message")]
    RankDeficient { available: usize, required: usize },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("repetition overflow: {n} bits repeated {l} times exceed {slots} channel uses")]
    RepetitionOverflow { n: usize, l: usize, slots: usize },
    #[error("index {index} out of range (size {size})")]
    IndexOutOfRange { index: u64, size: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("optimizer failure: {0}")]
    Optimizer(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
