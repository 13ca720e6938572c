use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Dimension, length or qubit-count mismatch.
    #[error("size error: {0}")]
    Size(String),

    /// Qubit or parameter index out of range.
    #[error("index error: {0}")]
    Index(String),

    /// Malformed or unsupported graph.
    #[error("graph error: {0}")]
    Graph(String),

    /// Non-finite values or a failed linear solve.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A precondition on a scalar argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}
