use std::fmt;
use std::str::FromStr;

use crate::error::{DatasetError, Result};

/// Axis-aligned box in normalized image coordinates: centre and size as
/// fractions of image width and height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub class_id: u32,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    /// Validated constructor: every field in `[0, 1]`, positive size.
    pub fn new(class_id: u32, cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        for (name, v) in [("cx", cx), ("cy", cy), ("w", w), ("h", h)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(DatasetError::InvalidBox(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(DatasetError::InvalidBox(format!("non-positive size {w} x {h}")));
        }
        Ok(Self { class_id, cx, cy, w, h })
    }

    /// Box spanning `[x0, x1] × [y0, y1]` after clamping to the unit square.
    /// `None` when the clamped box has no area.
    pub fn from_corners(class_id: u32, x0: f64, y0: f64, x1: f64, y1: f64) -> Option<Self> {
        let (x0, x1) = (x0.clamp(0.0, 1.0), x1.clamp(0.0, 1.0));
        let (y0, y1) = (y0.clamp(0.0, 1.0), y1.clamp(0.0, 1.0));
        if x1 <= x0 || y1 <= y0 {
            return None;
        }
        Some(Self { class_id, cx: (x0 + x1) / 2.0, cy: (y0 + y1) / 2.0, w: x1 - x0, h: y1 - y0 })
    }

    /// `(x0, y0, x1, y1)`.
    pub fn corners(&self) -> (f64, f64, f64, f64) {
        let (hw, hh) = (self.w / 2.0, self.h / 2.0);
        (self.cx - hw, self.cy - hh, self.cx + hw, self.cy + hh)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Whether the box extent lies inside the unit square, allowing `tol` of
    /// rounding slack.
    pub fn within_unit_square(&self, tol: f64) -> bool {
        let (x0, y0, x1, y1) = self.corners();
        self.w > 0.0 && self.h > 0.0 && x0 >= -tol && y0 >= -tol && x1 <= 1.0 + tol && y1 <= 1.0 + tol
    }
}

/// Classifier target. `Anomaly` (a visible leak) is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassLabel {
    Normal,
    Anomaly,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 2] = [ClassLabel::Normal, ClassLabel::Anomaly];

    /// Training target: 0 for Normal, 1 for Anomaly.
    pub fn target(self) -> f32 {
        match self {
            ClassLabel::Normal => 0.0,
            ClassLabel::Anomaly => 1.0,
        }
    }

    pub fn is_anomaly(self) -> bool {
        self == ClassLabel::Anomaly
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Normal => "normal",
            ClassLabel::Anomaly => "anomaly",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassLabel {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" | "0" => Ok(ClassLabel::Normal),
            "anomaly" | "1" => Ok(ClassLabel::Anomaly),
            other => Err(DatasetError::Config(format!("unknown class label {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_validates_range_and_size() {
        assert!(BoundingBox::new(0, 0.5, 0.5, 0.2, 0.1).is_ok());
        assert!(BoundingBox::new(0, 0.5, 0.5, 1.2, 0.1).is_err());
        assert!(BoundingBox::new(0, 0.5, 0.5, 0.0, 0.1).is_err());
        assert!(BoundingBox::new(0, f64::NAN, 0.5, 0.1, 0.1).is_err());
    }

    #[test]
    fn corners_round_trip() {
        let b = BoundingBox::from_corners(2, 0.25, 0.5, 0.75, 1.25).unwrap();
        assert_eq!(b, BoundingBox { class_id: 2, cx: 0.5, cy: 0.75, w: 0.5, h: 0.5 });
        assert_eq!(b.corners(), (0.25, 0.5, 0.75, 1.0));
        assert!(BoundingBox::from_corners(0, 1.1, 0.0, 1.5, 1.0).is_none());
    }

    #[test]
    fn labels_parse_by_name_and_index() {
        assert_eq!("Anomaly".parse::<ClassLabel>().unwrap(), ClassLabel::Anomaly);
        assert_eq!("0".parse::<ClassLabel>().unwrap(), ClassLabel::Normal);
        assert!("leak".parse::<ClassLabel>().is_err());
    }
}
