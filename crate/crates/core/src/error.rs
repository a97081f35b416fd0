use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("blocked vertex {0}")]
    BlockedVertex(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("unknown configuration {0:?}")]
    UnknownConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
