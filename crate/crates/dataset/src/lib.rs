//! Dataset management for the leak classifier: bounding-box labels in YOLO
//! text format, reproducible train/val/test splits, augmentation that keeps
//! boxes consistent with pixels, and a seeded generator of synthetic
//! leak/no-leak images.

mod augment;
mod bbox;
mod error;
mod mosaic;
pub mod rng;
mod split;
mod store;
mod synth;
mod yolo;

pub use augment::{apply_augment, augment, flip_boxes_horizontal, flip_boxes_vertical, AugmentConfig, AugmentParams};
pub use bbox::{BoundingBox, ClassLabel};
pub use error::{DatasetError, Result};
pub use mosaic::{mosaic, mosaic_at};
pub use split::{split_dataset, split_stratified, Split, SplitManifest, SplitRatios};
pub use store::{read_classes_csv, write_classes_csv, Dataset, Sample};
pub use synth::{synth_generate, synth_sample, SynthConfig, SynthSample};
pub use yolo::{parse_yolo_label, read_yolo_file, write_yolo_file, write_yolo_label};
