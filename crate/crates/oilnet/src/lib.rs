//! OilNet40, a small convolutional classifier deciding whether a cropped
//! damper image shows an oil leak.
//!
//! The crate covers model construction, the training loop with model
//! selection on validation accuracy, hyperparameter search, a binary
//! checkpoint format, prediction and feature-map export.

mod activations;
mod checkpoint;
mod data;
mod error;
mod metrics;
mod model;
mod search;
mod spec;
mod train;

#[cfg(any(test, feature = "reference"))]
pub mod reference;

pub use activations::{dump_activations, scale_channels};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta, FORMAT_VERSION, MAGIC};
pub use data::{images_to_batch, InputPipeline, LabeledImage, DEFAULT_CROP_MARGIN};
pub use error::{OilnetError, Result};
pub use metrics::ConfusionMatrix;
pub use model::{label_for, Affine, BatchNorm, ForwardCache, Oilnet40, RunningStats};
pub use search::{random_search, SearchOutcome, SearchSpace, Trial};
pub use spec::Oilnet40Spec;
pub use train::{evaluate, train, EpochRecord, Evaluation, TrainConfig, TrainReport};
