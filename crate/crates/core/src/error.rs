use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A register does not fit the simulator ceiling or a problem is too large to enumerate.
    #[error("capacity exceeded: {what} needs {required} qubits/variables, limit is {limit}")]
    Capacity {
        what: String,
        required: usize,
        limit: usize,
    },
    /// Malformed argument: indices out of range, dimension mismatch and similar.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// Input data failed validation (files, specs, datasets).
    #[error("validation failed: {0}")]
    Validation(String),
    /// A convex sub-problem has an empty feasible region.
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
