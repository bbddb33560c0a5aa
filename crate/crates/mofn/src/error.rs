//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by any layer of the crate.
///
/// The CLI maps these onto exit codes: configuration and usage problems
/// exit 1, data and format problems exit 2.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates a structural precondition (index out of range,
    /// dimension mismatch, empty input).
    #[error("structural error: {0}")]
    Structural(String),

    /// An input file does not match its expected format.
    #[error("format error: {0}")]
    Format(String),

    /// A configuration value is invalid or inconsistent with the data.
    #[error("configuration error: {0}")]
    Config(String),

    /// The data itself cannot support the requested operation.
    #[error("data error: {0}")]
    Data(String),

    /// A trainer diverged or failed to produce finite parameters.
    #[error("training error: {0}")]
    Training(String),

    /// A model collapsed to something unusable (for example every feature
    /// filtered out of a checklist).
    #[error("degenerate model: {0}")]
    Degenerate(String),

    /// A metric is undefined on the given labels.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// The brute-force oracle refused an instance larger than its caps.
    #[error("oracle refused: {0}")]
    OracleRefused(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn training(msg: impl Into<String>) -> Self {
        Error::Training(msg.into())
    }
}
