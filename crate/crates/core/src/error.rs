use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("collision singularity: {0}")]
    Collision(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("unsupported case: {0}")]
    Unsupported(String),
    #[error("degenerate system: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
