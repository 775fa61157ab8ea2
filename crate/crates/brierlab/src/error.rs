use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Model parameters failed validation (prior outside (0,1), covariance not PD, ...).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Argument outside the operation's domain (empty input, t outside (0,1), ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A stated precondition of the operation does not hold for the given data.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Malformed structured input (CSV / config file).
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
