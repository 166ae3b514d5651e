use leakspot_imageproc::ImageError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dataset layout: {0}")]
    Layout(String),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, DatasetError>;
