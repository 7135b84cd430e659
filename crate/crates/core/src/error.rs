use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("direction {direction:?} is not reproducible by the scaled arms")]
    Infeasible { direction: Vec<f64> },
    #[error("degenerate direction: {0}")]
    DegenerateDirection(String),
    #[error("degenerate allocation: {0}")]
    DegenerateAllocation(String),
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
