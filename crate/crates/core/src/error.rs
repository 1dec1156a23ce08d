use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty history: cannot average zero outcomes")]
    EmptyHistory,

    #[error("invalid simplex point: {0}")]
    InvalidSimplex(String),

    #[error("outcome index {index} out of range for K = {k}")]
    OutcomeOutOfRange { index: usize, k: usize },

    #[error("dimension mismatch: expected K = {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("horizon exceeded: round {round} > T = {horizon}")]
    HorizonExceeded { round: usize, horizon: usize },

    #[error("fixed outcome sequence exhausted at round {round} (length {len})")]
    SequenceExhausted { round: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("boundary point {0} not allowed; grid must lie strictly inside (0, 1)")]
    BoundaryPoint(f64),

    #[error("horizon {horizon} outside supported range [{min}, {max}]")]
    HorizonOutOfRange { horizon: usize, min: usize, max: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
