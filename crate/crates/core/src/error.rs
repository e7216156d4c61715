use thiserror::Error;

/// Failure modes shared by every evaluator in the crate.
///
/// The variant name is the first token of the rendered message, which the
/// command-line front end prints verbatim on stderr.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QError {
    #[error("DenominatorPole: {0}")]
    DenominatorPole(String),
    #[error("NonConvergent: {0}")]
    NonConvergent(String),
    #[error("OutOfRange: {0}")]
    OutOfRange(String),
    #[error("InvalidParameter: {0}")]
    InvalidParameter(String),
    #[error("DimensionMismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("InvalidEpsilon: {0}")]
    InvalidEpsilon(String),
    #[error("InternalError: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, QError>;

pub(crate) fn out_of_range(what: impl Into<String>) -> QError {
    QError::OutOfRange(what.into())
}
