use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A quantity diverges at the requested input (e.g. VSWR at |S11| = 1).
    #[error("singularity: {0}")]
    Singularity(String),

    /// A query fell outside the range covered by the data.
    #[error("out of range: {0}")]
    Range(String),

    /// Malformed Touchstone input.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
