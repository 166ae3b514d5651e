use leakspot_dataset::BoundingBox;
use leakspot_imageproc::ImageU8;

use crate::error::Result;

/// Half-open pixel rectangle `[y0, y1) × [x0, x1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRect {
    pub y0: usize,
    pub x0: usize,
    pub y1: usize,
    pub x1: usize,
}

impl PixelRect {
    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }

    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }
}

/// Rounds `[lo, hi]` (fractions of `n`) outwards to whole pixels, clamped to
/// the image and at least one pixel wide.
fn pixel_span(lo: f64, hi: f64, n: usize) -> (usize, usize) {
    let nf = n as f64;
    let a = (lo * nf).floor().clamp(0.0, nf - 1.0) as usize;
    let b = ((hi * nf).ceil().clamp(0.0, nf) as usize).max(a + 1);
    (a, b)
}

/// Pixel rectangle covering `b` grown by `margin_frac` of its size on every
/// side.
pub fn crop_rect(height: usize, width: usize, b: &BoundingBox, margin_frac: f64) -> PixelRect {
    let (x0, y0, x1, y1) = b.corners();
    let (mx, my) = (margin_frac * b.w, margin_frac * b.h);
    let (px0, px1) = pixel_span(x0 - mx, x1 + mx, width);
    let (py0, py1) = pixel_span(y0 - my, y1 + my, height);
    PixelRect { y0: py0, x0: px0, y1: py1, x1: px1 }
}

pub fn crop(img: &ImageU8, b: &BoundingBox, margin_frac: f64) -> Result<ImageU8> {
    let r = crop_rect(img.height(), img.width(), b, margin_frac);
    Ok(img.sub_image(r.y0, r.x0, r.height(), r.width())?)
}
