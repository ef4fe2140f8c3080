use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("value out of range: {0}")]
    Range(String),
    #[error("duplicate clause: {0}")]
    DuplicateClause(String),
    #[error("clause width {found} does not match formula width {expected}")]
    Width { expected: usize, found: usize },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("conflict: clause {clause} became empty")]
    Conflict { clause: usize },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
