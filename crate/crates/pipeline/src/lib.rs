//! The leak-spotting pipeline: detect the damper, crop it, preprocess the
//! crop and classify it, frame by frame, with throughput reporting. Also
//! hosts the dataset-level training and evaluation used by the `leakspot`
//! command line.

mod classify;
mod error;
mod frame;
mod settings;
mod stream;

pub use classify::{evaluate_variants, train_classifier, tune_classifier, ClassifierOptions, ClassifierReport, VariantResult};
pub use error::{PipelineError, Result};
pub use frame::{
    check_compatibility, read_label_dir, DetectorConfig, FrameLabels, FrameOutcome, FrameResult, Pipeline, PipelineConfig, StageTimings,
};
pub use settings::Settings;
pub use stream::{frame_paths, read_frame_labels, read_frames, run_stream, without_timing, RunReport};
