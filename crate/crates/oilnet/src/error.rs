use leakspot_dataset::DatasetError;
use leakspot_detection::DetectionError;
use leakspot_imageproc::ImageError;
use leakspot_tensor::TensorError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OilnetError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    Version { found: u16, expected: u16 },
    #[error("training diverged at epoch {epoch}, step {step}: loss is {loss}")]
    Diverged { epoch: usize, step: usize, loss: f32 },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, OilnetError>;
