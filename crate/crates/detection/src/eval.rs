//! Mean average precision over IoU thresholds.
//!
//! Per threshold, detections are ranked by score and each is matched to the
//! unmatched ground-truth box of the same image and class with the highest
//! IoU at or above the threshold. AP is the area under the precision
//! envelope (all-point interpolation).

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use leakspot_dataset::BoundingBox;

use crate::error::{DetectionError, Result};
use crate::geometry::{iou, Detection};

/// Ground-truth boxes keyed by image id.
pub type GroundTruth = BTreeMap<String, Vec<BoundingBox>>;

/// 0.50, 0.55, …, 0.95.
pub const COCO_THRESHOLDS: [f64; 10] = [0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95];

#[derive(Debug, Clone, PartialEq)]
pub struct DetEvalResult {
    pub thresholds: Vec<f64>,
    pub average_precision: Vec<f64>,
    pub mean_ap: f64,
    /// Match counts at IoU 0.5.
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl DetEvalResult {
    /// Line-oriented report: a version header, one `threshold<TAB>ap` row per
    /// threshold, then the mean and the IoU-0.5 counts.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# leakspot detection evaluation v1\niou_threshold\tap\n");
        for (t, ap) in self.thresholds.iter().zip(&self.average_precision) {
            writeln!(out, "{t:.2}\t{ap:.12}").unwrap();
        }
        writeln!(out, "mean\t{:.12}", self.mean_ap).unwrap();
        writeln!(out, "tp@0.50\t{}", self.true_positives).unwrap();
        writeln!(out, "fp@0.50\t{}", self.false_positives).unwrap();
        writeln!(out, "fn@0.50\t{}", self.false_negatives).unwrap();
        out
    }
}

fn box_key(b: &BoundingBox) -> [f64; 4] {
    [b.cx, b.cy, b.w, b.h]
}

/// Evaluation order: descending score, then image id, class and coordinates.
/// Using a total order on content makes the evaluation independent of the
/// order of the input list.
pub fn ranking_order(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        let (da, db) = (&dets[a], &dets[b]);
        db.score
            .total_cmp(&da.score)
            .then_with(|| da.image_id.cmp(&db.image_id))
            .then_with(|| da.bbox.class_id.cmp(&db.bbox.class_id))
            .then_with(|| {
                box_key(&da.bbox)
                    .iter()
                    .zip(box_key(&db.bbox))
                    .map(|(x, y)| x.total_cmp(&y))
                    .find(|o| *o != Ordering::Equal)
                    .unwrap_or(Ordering::Equal)
            })
    });
    order
}

struct Matching {
    is_tp: Vec<bool>,
    total_gt: usize,
}

fn match_at(dets: &[Detection], order: &[usize], gt: &GroundTruth, threshold: f64) -> Matching {
    let mut used: BTreeMap<&str, Vec<bool>> = gt.iter().map(|(k, v)| (k.as_str(), vec![false; v.len()])).collect();
    let mut is_tp = Vec::with_capacity(order.len());
    for &i in order {
        let d = &dets[i];
        let mut best: Option<(usize, f64)> = None;
        if let (Some(boxes), Some(flags)) = (gt.get(&d.image_id), used.get(d.image_id.as_str())) {
            for (j, g) in boxes.iter().enumerate() {
                if flags[j] || g.class_id != d.bbox.class_id {
                    continue;
                }
                let overlap = iou(&d.bbox, g);
                if overlap >= threshold && best.map_or(true, |(_, b)| overlap > b) {
                    best = Some((j, overlap));
                }
            }
        }
        if let Some((j, _)) = best {
            used.get_mut(d.image_id.as_str()).unwrap()[j] = true;
        }
        is_tp.push(best.is_some());
    }
    Matching { is_tp, total_gt: gt.values().map(Vec::len).sum() }
}

fn average_precision(m: &Matching) -> f64 {
    if m.total_gt == 0 {
        return 0.0;
    }
    let mut recall = vec![0.0];
    let mut precision = vec![0.0];
    let (mut tp, mut fp) = (0usize, 0usize);
    for &hit in &m.is_tp {
        if hit {
            tp += 1;
        } else {
            fp += 1;
        }
        recall.push(tp as f64 / m.total_gt as f64);
        precision.push(tp as f64 / (tp + fp) as f64);
    }
    for i in (0..precision.len() - 1).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    recall.windows(2).zip(&precision[1..]).fold(0.0, |acc, (r, p)| acc + (r[1] - r[0]) * p)
}

pub fn map_eval(dets: &[Detection], gt: &GroundTruth, thresholds: &[f64]) -> Result<DetEvalResult> {
    if thresholds.is_empty() || thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(DetectionError::Invalid(format!("IoU thresholds {thresholds:?} must be non-empty and within [0, 1]")));
    }
    let order = ranking_order(dets);
    let average_precision: Vec<f64> = thresholds.iter().map(|&t| average_precision(&match_at(dets, &order, gt, t))).collect();
    let mean_ap = average_precision.iter().sum::<f64>() / thresholds.len() as f64;
    let at_half = match_at(dets, &order, gt, 0.5);
    let tp = at_half.is_tp.iter().filter(|&&h| h).count();
    Ok(DetEvalResult {
        thresholds: thresholds.to_vec(),
        average_precision,
        mean_ap,
        true_positives: tp,
        false_positives: at_half.is_tp.len() - tp,
        false_negatives: at_half.total_gt - tp,
    })
}

/// mAP 0.5:0.95.
pub fn map_eval_default(dets: &[Detection], gt: &GroundTruth) -> Result<DetEvalResult> {
    map_eval(dets, gt, &COCO_THRESHOLDS)
}
