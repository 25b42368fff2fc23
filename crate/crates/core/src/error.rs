//! Error type shared by every module.

use thiserror::Error;

/// Failures reported by graph construction, operator building, and the
/// estimators.
#[derive(Debug, Error)]
pub enum Error {
    /// The input lies outside the domain of the operation (bad vertex id,
    /// malformed graph, empty edge set, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// A numeric parameter is out of range.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// A linear-algebra routine failed or produced an unusable result.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// A checked property did not hold.
    #[error("property violation: {0}")]
    Property(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn parameter(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
