use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("invalid image dimensions: {0}")]
    Dimensions(String),
    #[error("expected {expected} channel(s), got {actual}")]
    Channels { expected: usize, actual: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed image file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Tensor(#[from] leakspot_tensor::TensorError),
}

pub type Result<T> = std::result::Result<T, ImageError>;
