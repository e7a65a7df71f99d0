//! Error taxonomy shared by all modules.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of laboratory operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the arguments was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The operation is not defined for this input (e.g. exact enumeration of
    /// a continuous law).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An explicit enumeration or memory budget was exceeded.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// A numeric routine produced a non-finite intermediate value.
    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// The input is degenerate for the requested statistic (e.g. all-zero
    /// samples for a scale parameter).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Configuration file could not be parsed.
    #[error("config parse error: {0}")]
    ConfigParse(#[from] serde_json::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
