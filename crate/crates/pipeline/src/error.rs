use leakspot_dataset::DatasetError;
use leakspot_detection::DetectionError;
use leakspot_imageproc::ImageError;
use leakspot_oilnet::OilnetError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] OilnetError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("settings file: {0}")]
    Settings(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, PipelineError>;
