use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use leakspot_dataset::{read_yolo_file, ClassLabel};
use leakspot_detection::{crop, detect, Detection, DetectorSource, GroundTruth};
use leakspot_imageproc::{preprocess, resize_bilinear, ClaheConfig, ImageU8, PreprocessVariant};
use leakspot_oilnet::{images_to_batch, load_checkpoint, Oilnet40, Oilnet40Spec, DEFAULT_CROP_MARGIN};

use crate::error::{PipelineError, Result};

/// Where detections come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DetectorConfig {
    /// Ground-truth boxes read from a directory of YOLO label files.
    Fixture { labels_dir: PathBuf },
    /// A detections file.
    File { path: PathBuf },
}

impl DetectorConfig {
    pub fn load(&self) -> Result<DetectorSource> {
        match self {
            DetectorConfig::Fixture { labels_dir } => Ok(DetectorSource::Fixture(read_label_dir(labels_dir)?)),
            DetectorConfig::File { path } => Ok(DetectorSource::from_file(path)?),
        }
    }
}

/// Reads every `<stem>.txt` in `dir` as the boxes of image `<stem>`.
pub fn read_label_dir(dir: &Path) -> Result<GroundTruth> {
    let mut gt = GroundTruth::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "txt") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                gt.insert(stem.to_string(), read_yolo_file(&path)?);
            }
        }
    }
    Ok(gt)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub detector: DetectorConfig,
    /// `None` uses the variant recorded in the checkpoint.
    pub variant: Option<PreprocessVariant>,
    pub clahe: ClaheConfig,
    pub checkpoint: PathBuf,
    pub crop_margin: f64,
    /// Expected model input size; `None` accepts whatever the checkpoint holds.
    pub input_size: Option<usize>,
}

impl PipelineConfig {
    pub fn new(detector: DetectorConfig, checkpoint: PathBuf) -> Self {
        Self { detector, variant: None, clahe: ClaheConfig::default(), checkpoint, crop_margin: DEFAULT_CROP_MARGIN, input_size: None }
    }

    /// Loads the checkpoint and detector and validates them together.
    pub fn build(&self) -> Result<Pipeline> {
        let ckpt = load_checkpoint(&self.checkpoint)?;
        let variant = match self.variant {
            Some(v) => v,
            None => ckpt.meta.variant.parse()?,
        };
        let model = ckpt.to_model()?;
        if let Some(size) = self.input_size {
            if size != model.spec().input_size {
                return Err(PipelineError::Config(format!(
                    "configured input size {size} but the checkpoint expects {}",
                    model.spec().input_size
                )));
            }
        }
        Pipeline::new(model, self.detector.load()?, variant, self.clahe, self.crop_margin)
    }
}

/// Rejects a model whose input channels differ from what `variant` emits.
pub fn check_compatibility(variant: PreprocessVariant, spec: &Oilnet40Spec) -> Result<()> {
    if variant.output_channels() != spec.input_channels {
        return Err(PipelineError::Config(format!(
            "variant {variant} produces {} channel(s) but the checkpoint expects {}",
            variant.output_channels(),
            spec.input_channels
        )));
    }
    Ok(())
}

/// A validated detector, preprocessing and classifier chain.
#[derive(Debug, Clone)]
pub struct Pipeline {
    model: Oilnet40,
    source: DetectorSource,
    variant: PreprocessVariant,
    clahe: ClaheConfig,
    crop_margin: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub detect: Duration,
    pub crop: Duration,
    pub preprocess: Duration,
    /// Resize, normalization and the forward pass.
    pub classify: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.detect + self.crop + self.preprocess + self.classify
    }
}

impl std::ops::AddAssign for StageTimings {
    fn add_assign(&mut self, rhs: Self) {
        self.detect += rhs.detect;
        self.crop += rhs.crop;
        self.preprocess += rhs.preprocess;
        self.classify += rhs.classify;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrameOutcome {
    NoDetection,
    Classified { probability: f32, label: ClassLabel },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub image_id: String,
    /// The detection that was classified.
    pub detection: Option<Detection>,
    pub outcome: FrameOutcome,
    pub timings: StageTimings,
}

impl FrameResult {
    /// The alert decision: frames without a detection count as Normal.
    pub fn predicted_label(&self) -> ClassLabel {
        match self.outcome {
            FrameOutcome::NoDetection => ClassLabel::Normal,
            FrameOutcome::Classified { label, .. } => label,
        }
    }

    pub fn probability(&self) -> Option<f32> {
        match self.outcome {
            FrameOutcome::NoDetection => None,
            FrameOutcome::Classified { probability, .. } => Some(probability),
        }
    }

    pub fn status(&self) -> &'static str {
        match self.outcome {
            FrameOutcome::NoDetection => "no-detection",
            FrameOutcome::Classified { .. } => "classified",
        }
    }

    /// Tab-separated fields without timings:
    /// `id status probability label score cx cy w h`, `-` for absent values.
    pub fn fields(&self) -> String {
        let mut out = format!("{}\t{}", self.image_id, self.status());
        match self.outcome {
            FrameOutcome::NoDetection => out.push_str("\t-\t-"),
            FrameOutcome::Classified { probability, label } => write!(out, "\t{probability:.6}\t{label}").unwrap(),
        }
        match &self.detection {
            None => out.push_str("\t-\t-\t-\t-\t-"),
            Some(d) => write!(out, "\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}", d.score, d.bbox.cx, d.bbox.cy, d.bbox.w, d.bbox.h).unwrap(),
        }
        out
    }

    pub fn to_text(&self) -> String {
        let t = &self.timings;
        format!(
            "# leakspot frame result v1\ntiming\tdetect_ms={:.3}\tcrop_ms={:.3}\tpreprocess_ms={:.3}\tclassify_ms={:.3}\n\
             id\tstatus\tprobability\tlabel\tscore\tcx\tcy\tw\th\n{}\n",
            ms(t.detect),
            ms(t.crop),
            ms(t.preprocess),
            ms(t.classify),
            self.fields()
        )
    }
}

pub(crate) fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Highest score wins; the earlier detection on ties.
fn best_detection(dets: Vec<Detection>) -> Option<Detection> {
    dets.into_iter().reduce(|best, d| if d.score > best.score { d } else { best })
}

impl Pipeline {
    pub fn new(model: Oilnet40, source: DetectorSource, variant: PreprocessVariant, clahe: ClaheConfig, crop_margin: f64) -> Result<Self> {
        check_compatibility(variant, model.spec())?;
        clahe.validate()?;
        if !(crop_margin >= 0.0) || !crop_margin.is_finite() {
            return Err(PipelineError::Config(format!("crop margin {crop_margin} must be a non-negative number")));
        }
        Ok(Self { model, source, variant, clahe, crop_margin })
    }

    pub fn model(&self) -> &Oilnet40 {
        &self.model
    }

    pub fn variant(&self) -> PreprocessVariant {
        self.variant
    }

    /// Detect, crop, preprocess, resize and classify one frame.
    pub fn run_frame(&self, image_id: &str, image: &ImageU8) -> Result<FrameResult> {
        let mut timings = StageTimings::default();
        let start = Instant::now();
        let detection = best_detection(detect(image_id, &self.source));
        timings.detect = start.elapsed();
        let Some(detection) = detection else {
            return Ok(FrameResult { image_id: image_id.to_string(), detection: None, outcome: FrameOutcome::NoDetection, timings });
        };

        let start = Instant::now();
        let cropped = crop(image, &detection.bbox, self.crop_margin)?;
        timings.crop = start.elapsed();

        let start = Instant::now();
        let prepared = preprocess(&cropped, self.variant, &self.clahe)?;
        timings.preprocess = start.elapsed();

        let start = Instant::now();
        let size = self.model.spec().input_size;
        let resized = resize_bilinear(&prepared, size, size)?;
        let (probability, label) = self.model.predict(&images_to_batch([&resized])?)?[0];
        timings.classify = start.elapsed();

        Ok(FrameResult {
            image_id: image_id.to_string(),
            detection: Some(detection),
            outcome: FrameOutcome::Classified { probability, label },
            timings,
        })
    }
}

/// Ground truth keyed by image id, as read from `classes.csv`.
pub type FrameLabels = BTreeMap<String, ClassLabel>;
