use thiserror::Error;

/// Errors raised by the library. Every variant carries a human-readable
/// message naming the offending input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Malformed input: entries out of range, invalid Dyck words, bad syntax.
    #[error("validation error: {0}")]
    Validation(String),
    /// Well-formed input outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Two routes to the same quantity disagree.
    #[error("inconsistent result: {0}")]
    Inconsistent(String),
    /// Input too large for an enumeration-based routine.
    #[error("input too large: {0}")]
    TooLarge(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
