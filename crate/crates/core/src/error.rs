use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix has no nonzero entry, so the gradient Lipschitz constant would be 0")]
    ZeroMatrix,

    #[error("objective increased for {0} consecutive iterations; the Lipschitz constant is likely mis-specified")]
    MisspecifiedLipschitz(usize),

    #[error("rate fit needs at least {required} usable points, found {usable}")]
    TooFewPoints { usable: usize, required: usize },

    #[error("rate table cell is n/a: {0}")]
    NotApplicable(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
