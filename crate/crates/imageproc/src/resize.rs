use crate::error::{ImageError, Result};
use crate::image::ImageU8;

/// Source coordinate, lower neighbour, upper neighbour and upper weight for
/// each destination index under half-pixel-centre sampling.
fn sample_positions(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|d| {
            let s = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let lo = s.floor() as usize;
            let hi = (lo + 1).min(src - 1);
            (lo, hi, s - lo as f64)
        })
        .collect()
}

/// Stretch to `out_h × out_w` with bilinear interpolation. Aspect ratio is not
/// preserved. Resizing to the source size returns an exact copy.
pub fn resize_bilinear(img: &ImageU8, out_h: usize, out_w: usize) -> Result<ImageU8> {
    if out_h == 0 || out_w == 0 {
        return Err(ImageError::Dimensions(format!("resize target {out_h}x{out_w}")));
    }
    if out_h == img.height() && out_w == img.width() {
        return Ok(img.clone());
    }
    let c = img.channels();
    let rows = sample_positions(img.height(), out_h);
    let cols = sample_positions(img.width(), out_w);
    let mut data = Vec::with_capacity(out_h * out_w * c);
    for &(y0, y1, fy) in &rows {
        for &(x0, x1, fx) in &cols {
            for ch in 0..c {
                let a = img.get(y0, x0, ch) as f64;
                let b = img.get(y0, x1, ch) as f64;
                let p = img.get(y1, x0, ch) as f64;
                let q = img.get(y1, x1, ch) as f64;
                let top = a + (b - a) * fx;
                let bottom = p + (q - p) * fx;
                let v = top + (bottom - top) * fy;
                data.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    ImageU8::new(out_h, out_w, c, data)
}
