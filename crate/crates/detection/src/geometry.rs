use leakspot_dataset::BoundingBox;

use crate::error::{DetectionError, Result};

/// A scored box on one image.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub image_id: String,
    pub bbox: BoundingBox,
    pub score: f64,
}

impl Detection {
    pub fn new(image_id: impl Into<String>, bbox: BoundingBox, score: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(DetectionError::Invalid(format!("score {score} outside [0, 1]")));
        }
        Ok(Self { image_id: image_id.into(), bbox, score })
    }
}

/// Intersection over union in normalized coordinates.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (ax0, ay0, ax1, ay1) = a.corners();
    let (bx0, by0, bx1, by1) = b.corners();
    let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
    let ih = (ay1.min(by1) - ay0.max(by0)).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    // Areas from the same corners as the intersection, so identical boxes
    // give exactly 1.
    let area_a = (ax1 - ax0) * (ay1 - ay0);
    let area_b = (bx1 - bx0) * (by1 - by0);
    let union = area_a + area_b - inter;
    (inter / union).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(cx: f64, cy: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(0, cx, cy, w, h).unwrap()
    }

    #[test]
    fn identical_and_disjoint() {
        let a = bx(0.3, 0.4, 0.2, 0.1);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &bx(0.8, 0.8, 0.1, 0.1)), 0.0);
        // Touching edges share no area.
        assert_eq!(iou(&bx(0.25, 0.5, 0.5, 0.5), &bx(0.75, 0.5, 0.5, 0.5)), 0.0);
    }

    #[test]
    fn half_shifted_squares_overlap_by_a_third() {
        // [0,2]×[0,2] and [1,3]×[0,2] on a 4×4 frame.
        let a = bx(0.25, 0.25, 0.5, 0.5);
        let b = bx(0.5, 0.25, 0.5, 0.5);
        assert!((iou(&a, &b) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn scores_are_validated() {
        assert!(Detection::new("a", bx(0.5, 0.5, 0.1, 0.1), 1.5).is_err());
    }
}
