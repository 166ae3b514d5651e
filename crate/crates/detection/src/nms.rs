use std::cmp::Ordering;

use crate::geometry::{iou, Detection};

/// Suppression threshold used for file-backed detector output.
pub const DEFAULT_NMS_THRESHOLD: f64 = 0.45;

/// Greedy non-maximum suppression. Detections are visited by descending
/// score, ties broken by input position; a detection is dropped when its IoU
/// with an already kept detection on the same image exceeds `iou_threshold`.
/// The result is sorted by descending score.
pub fn nms(dets: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.partial_cmp(&dets[a].score).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    let mut kept: Vec<&Detection> = Vec::new();
    for i in order {
        let d = &dets[i];
        if kept.iter().all(|k| k.image_id != d.image_id || iou(&k.bbox, &d.bbox) <= iou_threshold) {
            kept.push(d);
        }
    }
    kept.into_iter().cloned().collect()
}
