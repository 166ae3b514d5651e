//! Four-sample mosaics: a 2×2 grid split at one point, each sample stretched
//! into its cell. Cells are ordered top-left, top-right, bottom-left,
//! bottom-right.

use leakspot_imageproc::{resize_bilinear, ImageU8};
use rand::Rng;

use crate::bbox::BoundingBox;
use crate::error::{DatasetError, Result};

/// Mosaic with the split at pixel row `split_y` and column `split_x`.
pub fn mosaic_at(
    samples: &[(ImageU8, Vec<BoundingBox>); 4],
    out_h: usize,
    out_w: usize,
    split_y: usize,
    split_x: usize,
) -> Result<(ImageU8, Vec<BoundingBox>)> {
    if split_y == 0 || split_y >= out_h || split_x == 0 || split_x >= out_w {
        return Err(DatasetError::Config(format!("split ({split_y}, {split_x}) must lie strictly inside {out_h}x{out_w}")));
    }
    let channels = samples[0].0.channels();
    if samples.iter().any(|(img, _)| img.channels() != channels) {
        return Err(DatasetError::Config("mosaic samples must share a channel count".into()));
    }
    let mut out = ImageU8::filled(out_h, out_w, channels, 0)?;
    let mut boxes = Vec::new();
    let cells = [(0, 0, split_y, split_x), (0, split_x, split_y, out_w - split_x), (split_y, 0, out_h - split_y, split_x), (split_y, split_x, out_h - split_y, out_w - split_x)];
    for ((img, sample_boxes), (y0, x0, ch, cw)) in samples.iter().zip(cells) {
        let cell = resize_bilinear(img, ch, cw)?;
        for y in 0..ch {
            for x in 0..cw {
                out.pixel_mut(y0 + y, x0 + x).copy_from_slice(cell.pixel(y, x));
            }
        }
        let (fx, fy) = (cw as f64 / out_w as f64, ch as f64 / out_h as f64);
        let (ox, oy) = (x0 as f64 / out_w as f64, y0 as f64 / out_h as f64);
        for b in sample_boxes {
            let (bx0, by0, bx1, by1) = b.corners();
            if let Some(m) = BoundingBox::from_corners(b.class_id, ox + bx0 * fx, oy + by0 * fy, ox + bx1 * fx, oy + by1 * fy) {
                boxes.push(m);
            }
        }
    }
    Ok((out, boxes))
}

/// Mosaic with the split point drawn uniformly from the central half of each
/// axis.
pub fn mosaic<R: Rng + ?Sized>(
    samples: &[(ImageU8, Vec<BoundingBox>); 4],
    out_h: usize,
    out_w: usize,
    rng: &mut R,
) -> Result<(ImageU8, Vec<BoundingBox>)> {
    let mut pick = |n: usize| {
        let u: f64 = rng.gen_range(0.25..=0.75);
        ((u * n as f64).round() as usize).clamp(1, n.saturating_sub(1).max(1))
    };
    let (sy, sx) = (pick(out_h), pick(out_w));
    mosaic_at(samples, out_h, out_w, sy, sx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::sample_rng;

    fn centred_sample() -> (ImageU8, Vec<BoundingBox>) {
        let mut img = ImageU8::filled(20, 20, 3, 30).unwrap();
        for y in 5..15 {
            for x in 5..15 {
                img.pixel_mut(y, x).copy_from_slice(&[200, 200, 200]);
            }
        }
        (img, vec![BoundingBox::new(0, 0.5, 0.5, 0.5, 0.5).unwrap()])
    }

    #[test]
    fn four_copies_give_one_box_per_cell() {
        let s = centred_sample();
        let samples = [s.clone(), s.clone(), s.clone(), s];
        let (img, boxes) = mosaic(&samples, 40, 60, &mut sample_rng(3, 0)).unwrap();
        assert_eq!((img.height(), img.width()), (40, 60));
        assert_eq!(boxes.len(), 4);
        let (tl, tr, bl, br) = (boxes[0], boxes[1], boxes[2], boxes[3]);
        assert!(tl.cx < tr.cx && bl.cx < br.cx);
        assert!(tl.cy < bl.cy && tr.cy < br.cy);
        assert_eq!((tl.cy, tl.cx), (tr.cy, bl.cx));
    }

    #[test]
    fn centre_split_cells_are_half_scale_resizes() {
        let s = centred_sample();
        let samples = [s.clone(), s.clone(), s.clone(), s.clone()];
        let (img, boxes) = mosaic_at(&samples, 40, 40, 20, 20).unwrap();
        // Each cell equals the sample stretched to 20×20 (here its own size).
        let cell = resize_bilinear(&s.0, 20, 20).unwrap();
        for (y0, x0) in [(0, 0), (0, 20), (20, 0), (20, 20)] {
            assert_eq!(img.sub_image(y0, x0, 20, 20).unwrap(), cell);
        }
        assert!((boxes[3].cx - 0.75).abs() < 1e-12 && (boxes[3].w - 0.25).abs() < 1e-12);
    }

    #[test]
    fn split_on_the_border_is_rejected() {
        let s = centred_sample();
        let samples = [s.clone(), s.clone(), s.clone(), s];
        assert!(mosaic_at(&samples, 40, 40, 0, 20).is_err());
    }
}
