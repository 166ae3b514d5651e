//! Detection-stage geometry and evaluation.
//!
//! The localization network itself is external: detections come either from
//! ground-truth labels (the fixture source) or from a detections file. This
//! crate provides everything downstream of it: overlap, suppression, mAP
//! 0.5:0.95 scoring and cropping of the detected region.

mod crop;
mod error;
mod eval;
mod geometry;
mod nms;
mod source;

#[cfg(any(test, feature = "reference"))]
pub mod reference;

pub use crop::{crop, crop_rect, PixelRect};
pub use error::{DetectionError, Result};
pub use eval::{map_eval, map_eval_default, ranking_order, DetEvalResult, GroundTruth, COCO_THRESHOLDS};
pub use geometry::{iou, Detection};
pub use nms::{nms, DEFAULT_NMS_THRESHOLD};
pub use source::{detect, parse_detections, read_detections, write_detections, DetectorSource};
