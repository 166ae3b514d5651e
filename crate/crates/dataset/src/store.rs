//! On-disk dataset layout:
//!
//! ```text
//! <root>/images/<stem>.ppm|.pgm|.png
//! <root>/labels/<stem>.txt     YOLO boxes, may be absent for unlabelled images
//! <root>/classes.csv           header `stem,label`, then one row per sample
//! <root>/split.json            {"seed", "train", "val", "test"} stem lists
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use leakspot_imageproc::io::{read_image, write_pnm};
use leakspot_imageproc::ImageU8;

use crate::bbox::{BoundingBox, ClassLabel};
use crate::error::{DatasetError, Result};
use crate::split::{split_stratified, Split, SplitManifest};
use crate::synth::{synth_sample, SynthConfig};
use crate::yolo::{read_yolo_file, write_yolo_file};

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub stem: String,
    pub image: ImageU8,
    pub boxes: Vec<BoundingBox>,
    pub label: ClassLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub manifest: SplitManifest,
}

pub fn write_classes_csv(rows: &[(String, ClassLabel)]) -> String {
    let mut out = String::from("stem,label\n");
    for (stem, label) in rows {
        writeln!(out, "{stem},{label}").unwrap();
    }
    out
}

pub fn read_classes_csv(text: &str) -> Result<Vec<(String, ClassLabel)>> {
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || (i == 0 && line.eq_ignore_ascii_case("stem,label")) {
            continue;
        }
        let (stem, label) = line
            .split_once(',')
            .ok_or_else(|| DatasetError::Parse { line: i + 1, message: "expected `stem,label`".into() })?;
        let label = label.parse().map_err(|e: DatasetError| DatasetError::Parse { line: i + 1, message: e.to_string() })?;
        rows.push((stem.trim().to_string(), label));
    }
    Ok(rows)
}

fn find_image(dir: &Path, stem: &str) -> Result<PathBuf> {
    ["ppm", "pgm", "png"]
        .iter()
        .map(|ext| dir.join(format!("{stem}.{ext}")))
        .find(|p| p.is_file())
        .ok_or_else(|| DatasetError::Layout(format!("no image for {stem:?} in {}", dir.display())))
}

impl Dataset {
    /// Generates every sample of `cfg` in memory with a class-stratified split.
    pub fn synthesize(cfg: &SynthConfig) -> Result<Self> {
        cfg.validate()?;
        let labels = cfg.labels();
        let mut samples = Vec::with_capacity(labels.len());
        let mut groups = [Vec::new(), Vec::new()];
        for (i, &label) in labels.iter().enumerate() {
            let s = synth_sample(cfg, i, label)?;
            let stem = SynthConfig::stem(i);
            groups[label.is_anomaly() as usize].push(stem.clone());
            samples.push(Sample { stem, image: s.image, boxes: s.boxes, label });
        }
        let manifest = split_stratified(&groups, cfg.split, cfg.seed)?;
        Ok(Self { samples, manifest })
    }

    pub fn save(&self, root: &Path) -> Result<()> {
        let (images, labels) = (root.join("images"), root.join("labels"));
        std::fs::create_dir_all(&images)?;
        std::fs::create_dir_all(&labels)?;
        for s in &self.samples {
            let ext = if s.image.channels() == 3 { "ppm" } else { "pgm" };
            write_pnm(&images.join(format!("{}.{ext}", s.stem)), &s.image)?;
            write_yolo_file(&labels.join(format!("{}.txt", s.stem)), &s.boxes)?;
        }
        let rows: Vec<_> = self.samples.iter().map(|s| (s.stem.clone(), s.label)).collect();
        std::fs::write(root.join("classes.csv"), write_classes_csv(&rows))?;
        std::fs::write(root.join("split.json"), self.manifest.to_json()?)?;
        Ok(())
    }

    pub fn load(root: &Path) -> Result<Self> {
        let rows = read_classes_csv(&std::fs::read_to_string(root.join("classes.csv"))?)?;
        let manifest = SplitManifest::from_json(&std::fs::read_to_string(root.join("split.json"))?)?;
        let mut samples = Vec::with_capacity(rows.len());
        for (stem, label) in rows {
            let image = read_image(&find_image(&root.join("images"), &stem)?)?;
            let label_path = root.join("labels").join(format!("{stem}.txt"));
            let boxes = if label_path.is_file() { read_yolo_file(&label_path)? } else { Vec::new() };
            samples.push(Sample { stem, image, boxes, label });
        }
        let ds = Self { samples, manifest };
        ds.check_manifest()?;
        Ok(ds)
    }

    fn check_manifest(&self) -> Result<()> {
        let index = self.index();
        for split in Split::ALL {
            if let Some(id) = self.manifest.ids(split).iter().find(|id| !index.contains_key(id.as_str())) {
                return Err(DatasetError::Layout(format!("{split} split references unknown sample {id:?}")));
            }
        }
        Ok(())
    }

    fn index(&self) -> HashMap<&str, usize> {
        self.samples.iter().enumerate().map(|(i, s)| (s.stem.as_str(), i)).collect()
    }

    pub fn get(&self, stem: &str) -> Option<&Sample> {
        self.samples.iter().find(|s| s.stem == stem)
    }

    /// Samples of one split in manifest order.
    pub fn split(&self, split: Split) -> Vec<&Sample> {
        let index = self.index();
        self.manifest.ids(split).iter().filter_map(|id| index.get(id.as_str()).map(|&i| &self.samples[i])).collect()
    }
}
