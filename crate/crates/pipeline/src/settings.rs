//! The `--config` file: a flat TOML table of optional keys shared by all
//! subcommands. Command-line flags override file values.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::Result;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub split: Option<String>,

    pub normal: Option<usize>,
    pub anomaly: Option<usize>,
    pub image_size: Option<usize>,

    pub variant: Option<String>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f32>,
    pub input_size: Option<usize>,
    pub dense1: Option<usize>,
    pub dense2: Option<usize>,
    pub augment: Option<bool>,
    pub report: Option<PathBuf>,

    pub clahe_tiles: Option<usize>,
    pub clip_limit: Option<f64>,
    pub crop_margin: Option<f64>,

    pub search_dense1: Option<Vec<usize>>,
    pub search_dense2: Option<Vec<usize>>,
    pub search_learning_rates: Option<Vec<f32>>,
    pub budget: Option<usize>,
    pub trial_epochs: Option<usize>,

    pub checkpoint: Option<PathBuf>,
    pub models: Option<PathBuf>,
    pub detector: Option<String>,
    pub detections: Option<PathBuf>,
    pub labels_dir: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub frames: Option<PathBuf>,
    pub image: Option<PathBuf>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
