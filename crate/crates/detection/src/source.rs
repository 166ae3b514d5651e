//! Detector sources and the detections file.
//!
//! Detections file: one detection per line,
//! `<image-stem> <class-id> <score> <cx> <cy> <w> <h>`, whitespace
//! separated, coordinates normalized. Blank lines and lines starting with `#`
//! are ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use leakspot_dataset::BoundingBox;

use crate::error::{DetectionError, Result};
use crate::eval::GroundTruth;
use crate::geometry::Detection;
use crate::nms::{nms, DEFAULT_NMS_THRESHOLD};

#[derive(Debug, Clone, PartialEq)]
pub enum DetectorSource {
    /// Returns the ground-truth boxes of each image with score 1.
    Fixture(GroundTruth),
    /// Returns stored detections, grouped by image id.
    File(BTreeMap<String, Vec<Detection>>),
}

impl DetectorSource {
    pub fn from_detections(dets: Vec<Detection>) -> Self {
        let mut by_image: BTreeMap<String, Vec<Detection>> = BTreeMap::new();
        for d in dets {
            by_image.entry(d.image_id.clone()).or_default().push(d);
        }
        DetectorSource::File(by_image)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Ok(Self::from_detections(read_detections(path)?))
    }
}

/// Detections for one image, best first. File detections are suppressed with
/// the default NMS threshold.
pub fn detect(image_id: &str, source: &DetectorSource) -> Vec<Detection> {
    match source {
        DetectorSource::Fixture(gt) => gt
            .get(image_id)
            .map(|boxes| boxes.iter().map(|b| Detection { image_id: image_id.to_string(), bbox: *b, score: 1.0 }).collect())
            .unwrap_or_default(),
        DetectorSource::File(by_image) => by_image.get(image_id).map(|d| nms(d, DEFAULT_NMS_THRESHOLD)).unwrap_or_default(),
    }
}

pub fn parse_detections(text: &str) -> Result<Vec<Detection>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: String| DetectionError::Parse { line, message };
        let f: Vec<&str> = trimmed.split_whitespace().collect();
        if f.len() != 7 {
            return Err(err(format!("expected 7 fields, found {}", f.len())));
        }
        let class_id = f[1].parse::<u32>().map_err(|_| err(format!("class id {:?} is not a non-negative integer", f[1])))?;
        let mut v = [0.0f64; 5];
        for (slot, field) in v.iter_mut().zip(&f[2..]) {
            *slot = field.parse().map_err(|_| err(format!("{field:?} is not a number")))?;
        }
        let bbox = BoundingBox::new(class_id, v[1], v[2], v[3], v[4]).map_err(|e| err(e.to_string()))?;
        out.push(Detection::new(f[0], bbox, v[0]).map_err(|e| err(e.to_string()))?);
    }
    Ok(out)
}

/// Six decimals for the score and every coordinate.
pub fn write_detections(dets: &[Detection]) -> String {
    let mut out = String::from("# image class score cx cy w h\n");
    for d in dets {
        let b = &d.bbox;
        writeln!(out, "{} {} {:.6} {:.6} {:.6} {:.6} {:.6}", d.image_id, b.class_id, d.score, b.cx, b.cy, b.w, b.h).unwrap();
    }
    out
}

pub fn read_detections(path: &Path) -> Result<Vec<Detection>> {
    parse_detections(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(cx: f64) -> BoundingBox {
        BoundingBox::new(0, cx, 0.5, 0.2, 0.2).unwrap()
    }

    #[test]
    fn fixture_returns_ground_truth_with_unit_score() {
        let gt: GroundTruth = [("a".to_string(), vec![bx(0.3)])].into_iter().collect();
        let d = detect("a", &DetectorSource::Fixture(gt.clone()));
        assert_eq!(d, vec![Detection { image_id: "a".into(), bbox: bx(0.3), score: 1.0 }]);
        assert!(detect("missing", &DetectorSource::Fixture(gt)).is_empty());
    }

    #[test]
    fn file_source_filters_and_sorts() {
        let text = "# comment\na 0 0.5 0.5 0.5 0.2 0.2\na 0 0.9 0.52 0.5 0.2 0.2\n\nb 0 0.4 0.3 0.5 0.2 0.2\n";
        let src = DetectorSource::from_detections(parse_detections(text).unwrap());
        let a = detect("a", &src);
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].score, 0.9);
        assert!(detect("c", &src).is_empty());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = parse_detections("a 0 0.5 0.5 0.5 0.2 0.2\na 0 1.5 0.5 0.5 0.2 0.2").unwrap_err();
        assert!(matches!(e, DetectionError::Parse { line: 2, .. }), "{e}");
        assert!(matches!(parse_detections("a 0 0.5").unwrap_err(), DetectionError::Parse { line: 1, .. }));
    }

    #[test]
    fn writer_output_parses_back() {
        let d = vec![Detection::new("x", bx(0.25), 0.75).unwrap()];
        assert_eq!(parse_detections(&write_detections(&d)).unwrap(), d);
    }
}
