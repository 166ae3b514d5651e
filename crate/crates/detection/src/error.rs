use leakspot_imageproc::ImageError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DetectionError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid detection: {0}")]
    Invalid(String),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DetectionError>;
