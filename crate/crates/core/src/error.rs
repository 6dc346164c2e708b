use thiserror::Error;

#[derive(Debug, Error)]
pub enum FdmError {
    /// Malformed or out-of-contract input: dimension mismatches, bad
    /// parameters, group labels outside the declared range.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The instance admits no solution of the requested shape, or the
    /// streaming candidates never filled up.
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: row {row}: {message}")]
    Parse {
        path: String,
        row: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = FdmError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> FdmError {
    FdmError::InvalidInput(msg.into())
}
