use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("precision exhausted: {0}")]
    Precision(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("irregular point: {0}")]
    Irregular(String),
    #[error("kind mismatch: {0}")]
    Kind(String),
    #[error("window error: {0}")]
    Window(String),
    #[error("representation error: {0}")]
    Representation(String),
    #[error("pole: {0}")]
    Pole(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
