//! Independent brute-force evaluators used as oracles.

use std::collections::BTreeMap;

use leakspot_dataset::BoundingBox;

use crate::eval::{ranking_order, GroundTruth};
use crate::geometry::Detection;

/// IoU from interval lengths computed per axis with explicit case analysis
/// rather than min/max clipping.
pub fn iou_by_intervals(a: &BoundingBox, b: &BoundingBox) -> f64 {
    fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
        if a1 <= b0 || b1 <= a0 {
            0.0
        } else if a0 <= b0 && b1 <= a1 {
            b1 - b0
        } else if b0 <= a0 && a1 <= b1 {
            a1 - a0
        } else if a0 < b0 {
            a1 - b0
        } else {
            b1 - a0
        }
    }
    let (ax0, ay0, ax1, ay1) = a.corners();
    let (bx0, by0, bx1, by1) = b.corners();
    let inter = overlap(ax0, ax1, bx0, bx1) * overlap(ay0, ay1, by0, by1);
    if inter == 0.0 {
        return 0.0;
    }
    inter / (a.w * a.h + b.w * b.h - inter)
}

/// IoU by counting cells of an `n × n` grid whose centres fall in each box.
pub fn iou_by_raster(a: &BoundingBox, b: &BoundingBox, n: usize) -> f64 {
    let (ax0, ay0, ax1, ay1) = a.corners();
    let (bx0, by0, bx1, by1) = b.corners();
    let (mut inter, mut union) = (0usize, 0usize);
    for i in 0..n {
        let y = (i as f64 + 0.5) / n as f64;
        for j in 0..n {
            let x = (j as f64 + 0.5) / n as f64;
            let in_a = ax0 <= x && x < ax1 && ay0 <= y && y < ay1;
            let in_b = bx0 <= x && x < bx1 && by0 <= y && y < by1;
            inter += (in_a && in_b) as usize;
            union += (in_a || in_b) as usize;
        }
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Suppression by repeated selection: take the best remaining detection,
/// then discard everything on its image that overlaps it beyond the
/// threshold, until nothing remains.
pub fn nms_by_selection(dets: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    let mut remaining: Vec<usize> = (0..dets.len()).collect();
    let mut kept = Vec::new();
    while !remaining.is_empty() {
        let mut best = 0;
        for (k, &i) in remaining.iter().enumerate() {
            let cur = remaining[best];
            if dets[i].score > dets[cur].score || (dets[i].score == dets[cur].score && i < cur) {
                best = k;
            }
        }
        let chosen = remaining.remove(best);
        let d = &dets[chosen];
        remaining.retain(|&i| dets[i].image_id != d.image_id || iou_by_intervals(&dets[i].bbox, &d.bbox) <= iou_threshold);
        kept.push(d.clone());
    }
    kept
}

/// AP as the sum over true positives of `max precision at or after that rank
/// / number of ground-truth boxes`, with matching done by exhaustive scans.
pub fn average_precision_brute(dets: &[Detection], gt: &GroundTruth, threshold: f64) -> f64 {
    let total: usize = gt.values().map(Vec::len).sum();
    if total == 0 {
        return 0.0;
    }
    let order = ranking_order(dets);
    let mut taken: BTreeMap<(String, usize), ()> = BTreeMap::new();
    let mut hits = Vec::new();
    for &i in &order {
        let d = &dets[i];
        let candidates = gt.get(&d.image_id).map(Vec::as_slice).unwrap_or(&[]);
        let mut best: Option<usize> = None;
        let mut best_iou = -1.0;
        for (j, g) in candidates.iter().enumerate() {
            let v = iou_by_intervals(&d.bbox, g);
            if g.class_id == d.bbox.class_id && v >= threshold && !taken.contains_key(&(d.image_id.clone(), j)) && v > best_iou {
                best = Some(j);
                best_iou = v;
            }
        }
        if let Some(j) = best {
            taken.insert((d.image_id.clone(), j), ());
        }
        hits.push(best.is_some());
    }
    let precision_at = |k: usize| {
        let tp = hits[..=k].iter().filter(|&&h| h).count();
        tp as f64 / (k + 1) as f64
    };
    let mut ap = 0.0;
    for k in 0..hits.len() {
        if hits[k] {
            let envelope = (k..hits.len()).map(precision_at).fold(0.0, f64::max);
            ap += envelope / total as f64;
        }
    }
    ap
}

pub fn map_brute(dets: &[Detection], gt: &GroundTruth, thresholds: &[f64]) -> f64 {
    thresholds.iter().map(|&t| average_precision_brute(dets, gt, t)).sum::<f64>() / thresholds.len() as f64
}

/// Random instance generators shared by the oracle tests.
pub mod random {
    use rand::Rng;

    use super::*;

    pub fn random_box<R: Rng + ?Sized>(rng: &mut R) -> BoundingBox {
        let w = rng.gen_range(0.02..0.8);
        let h = rng.gen_range(0.02..0.8);
        BoundingBox::new(0, rng.gen_range(w / 2.0..=1.0 - w / 2.0), rng.gen_range(h / 2.0..=1.0 - h / 2.0), w, h).unwrap()
    }

    /// Box with corners on a `1/grid` lattice.
    pub fn lattice_box<R: Rng + ?Sized>(rng: &mut R, grid: usize) -> BoundingBox {
        let (x0, x1) = loop {
            let (a, b) = (rng.gen_range(0..=grid), rng.gen_range(0..=grid));
            if a != b {
                break (a.min(b), a.max(b));
            }
        };
        let (y0, y1) = loop {
            let (a, b) = (rng.gen_range(0..=grid), rng.gen_range(0..=grid));
            if a != b {
                break (a.min(b), a.max(b));
            }
        };
        let g = grid as f64;
        BoundingBox::from_corners(0, x0 as f64 / g, y0 as f64 / g, x1 as f64 / g, y1 as f64 / g).unwrap()
    }

    /// A perturbed copy of `b`, so overlaps span the whole IoU range.
    pub fn jitter<R: Rng + ?Sized>(rng: &mut R, b: &BoundingBox) -> BoundingBox {
        let s = rng.gen_range(0.0..0.25);
        let (x0, y0, x1, y1) = b.corners();
        let mut d = || rng.gen_range(-s..=s) * b.w.max(b.h);
        BoundingBox::from_corners(0, x0 + d(), y0 + d(), x1 + d(), y1 + d()).unwrap_or(*b)
    }

    /// Up to `max_images` images with up to `max_boxes` ground-truth boxes
    /// each, and detections mixing jittered copies, exact copies and
    /// unrelated boxes. Scores come from a coarse set so ties occur.
    pub fn eval_instance<R: Rng + ?Sized>(rng: &mut R, max_images: usize, max_boxes: usize) -> (Vec<Detection>, GroundTruth) {
        let mut gt = GroundTruth::new();
        let mut dets = Vec::new();
        for img in 0..rng.gen_range(1..=max_images) {
            let id = format!("img{img}");
            let boxes: Vec<BoundingBox> = (0..rng.gen_range(0..=max_boxes)).map(|_| random_box(rng)).collect();
            for b in &boxes {
                for _ in 0..rng.gen_range(0..=2) {
                    let db = if rng.gen_bool(0.2) { *b } else { jitter(rng, b) };
                    dets.push(Detection { image_id: id.clone(), bbox: db, score: rng.gen_range(0..=10) as f64 / 10.0 });
                }
            }
            for _ in 0..rng.gen_range(0..=2) {
                dets.push(Detection { image_id: id.clone(), bbox: random_box(rng), score: rng.gen_range(0..=10) as f64 / 10.0 });
            }
            gt.insert(id, boxes);
        }
        (dets, gt)
    }
}
