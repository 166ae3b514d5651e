//! Label-aware augmentation.
//!
//! Geometry is a similarity transform about the image centre in pixel units:
//! `q = c + s·R(θ)(p − c) + t`. The y axis points down, so positive `θ` turns
//! content clockwise on screen. Output pixels are sampled from the inverse map
//! with bilinear interpolation and mirror padding. Flips are exact index
//! reversals applied afterwards, then the brightness offset.

use leakspot_imageproc::ImageU8;
use rand::Rng;

use crate::bbox::BoundingBox;
use crate::error::{DatasetError, Result};

/// Boxes keeping less than this fraction of their transformed area inside the
/// image are dropped.
const MIN_RETAINED_AREA: f64 = 0.2;

/// Sampling ranges for one augmentation draw. `zoom` holds offsets from a
/// unit scale factor and `shift` fractions of the image size, drawn
/// independently per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentConfig {
    pub rotation_deg: (f64, f64),
    pub zoom: (f64, f64),
    pub shift: (f64, f64),
    pub flip_horizontal: f64,
    pub flip_vertical: f64,
    pub brightness: (f64, f64),
    /// Whether callers that train on multi-sample batches compose mosaics.
    pub mosaic: bool,
}

impl AugmentConfig {
    /// Every range zero, flips off: images and boxes pass through unchanged.
    pub fn identity() -> Self {
        Self {
            rotation_deg: (0.0, 0.0),
            zoom: (0.0, 0.0),
            shift: (0.0, 0.0),
            flip_horizontal: 0.0,
            flip_vertical: 0.0,
            brightness: (0.0, 0.0),
            mosaic: false,
        }
    }

    /// Full-range rotation, mild zoom and shift, both flips, small brightness
    /// jitter.
    pub fn classifier_default() -> Self {
        Self {
            rotation_deg: (-90.0, 90.0),
            zoom: (-0.1, 0.1),
            shift: (-0.05, 0.05),
            flip_horizontal: 0.5,
            flip_vertical: 0.5,
            brightness: (-12.0, 12.0),
            mosaic: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ranges = [("rotation", self.rotation_deg), ("zoom", self.zoom), ("shift", self.shift), ("brightness", self.brightness)];
        for (name, (lo, hi)) in ranges {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(DatasetError::Config(format!("{name} range ({lo}, {hi}) is not ordered")));
            }
        }
        if self.rotation_deg.0 < -90.0 || self.rotation_deg.1 > 90.0 {
            return Err(DatasetError::Config("rotation range must lie within [-90, 90] degrees".into()));
        }
        if self.zoom.0 <= -1.0 {
            return Err(DatasetError::Config("zoom offsets must keep the scale factor positive".into()));
        }
        for (name, p) in [("horizontal flip", self.flip_horizontal), ("vertical flip", self.flip_vertical)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(DatasetError::Config(format!("{name} probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self::identity()
    }
}

/// One concrete transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentParams {
    pub rotation_deg: f64,
    pub scale: f64,
    pub shift_x: f64,
    pub shift_y: f64,
    pub flip_horizontal: bool,
    pub flip_vertical: bool,
    pub brightness: i32,
}

impl AugmentParams {
    pub fn identity() -> Self {
        Self { rotation_deg: 0.0, scale: 1.0, shift_x: 0.0, shift_y: 0.0, flip_horizontal: false, flip_vertical: false, brightness: 0 }
    }

    /// Draws every field in a fixed order, so the number of random values
    /// consumed does not depend on the configuration.
    pub fn sample<R: Rng + ?Sized>(cfg: &AugmentConfig, rng: &mut R) -> Self {
        let mut uniform = |(lo, hi): (f64, f64)| lo + (hi - lo) * rng.gen::<f64>();
        let rotation_deg = uniform(cfg.rotation_deg);
        let scale = 1.0 + uniform(cfg.zoom);
        let shift_x = uniform(cfg.shift);
        let shift_y = uniform(cfg.shift);
        let brightness = uniform(cfg.brightness).round() as i32;
        let flip_horizontal = rng.gen::<f64>() < cfg.flip_horizontal;
        let flip_vertical = rng.gen::<f64>() < cfg.flip_vertical;
        Self { rotation_deg, scale, shift_x, shift_y, flip_horizontal, flip_vertical, brightness }
    }

    fn is_rigid_identity(&self) -> bool {
        self.rotation_deg == 0.0 && self.scale == 1.0 && self.shift_x == 0.0 && self.shift_y == 0.0
    }
}

struct Similarity {
    cx: f64,
    cy: f64,
    cos: f64,
    sin: f64,
    scale: f64,
    tx: f64,
    ty: f64,
}

impl Similarity {
    fn new(p: &AugmentParams, height: usize, width: usize) -> Self {
        let theta = p.rotation_deg.to_radians();
        Self {
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            cos: theta.cos(),
            sin: theta.sin(),
            scale: p.scale,
            tx: p.shift_x * width as f64,
            ty: p.shift_y * height as f64,
        }
    }

    fn forward(&self, x: f64, y: f64) -> (f64, f64) {
        let (dx, dy) = (x - self.cx, y - self.cy);
        (
            self.cx + self.scale * (self.cos * dx - self.sin * dy) + self.tx,
            self.cy + self.scale * (self.sin * dx + self.cos * dy) + self.ty,
        )
    }

    fn inverse(&self, x: f64, y: f64) -> (f64, f64) {
        let (dx, dy) = ((x - self.tx - self.cx) / self.scale, (y - self.ty - self.cy) / self.scale);
        (self.cx + self.cos * dx + self.sin * dy, self.cy - self.sin * dx + self.cos * dy)
    }
}

/// Mirror a continuous pixel-index coordinate into `[0, n − 1]`, reflecting
/// about the outer pixel edges.
fn reflect(u: f64, n: usize) -> f64 {
    let period = 2.0 * n as f64;
    let mut m = (u + 0.5).rem_euclid(period);
    if m > n as f64 {
        m = period - m;
    }
    (m - 0.5).clamp(0.0, (n - 1) as f64)
}

fn warp(img: &ImageU8, t: &Similarity) -> Result<ImageU8> {
    let (h, w, c) = (img.height(), img.width(), img.channels());
    let mut data = Vec::with_capacity(h * w * c);
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = t.inverse(x as f64 + 0.5, y as f64 + 0.5);
            let (u, v) = (reflect(sx - 0.5, w), reflect(sy - 0.5, h));
            let (x0, y0) = (u.floor() as usize, v.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
            let (fx, fy) = (u - x0 as f64, v - y0 as f64);
            for ch in 0..c {
                let a = img.get(y0, x0, ch) as f64;
                let b = img.get(y0, x1, ch) as f64;
                let p = img.get(y1, x0, ch) as f64;
                let q = img.get(y1, x1, ch) as f64;
                let top = a + (b - a) * fx;
                let bottom = p + (q - p) * fx;
                data.push((top + (bottom - top) * fy).round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Ok(ImageU8::new(h, w, c, data)?)
}

fn flip_pixels(img: &ImageU8, horizontal: bool, vertical: bool) -> ImageU8 {
    let (h, w) = (img.height(), img.width());
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            let sy = if vertical { h - 1 - y } else { y };
            let sx = if horizontal { w - 1 - x } else { x };
            out.pixel_mut(y, x).copy_from_slice(img.pixel(sy, sx));
        }
    }
    out
}

pub fn flip_boxes_horizontal(boxes: &[BoundingBox]) -> Vec<BoundingBox> {
    boxes.iter().map(|b| BoundingBox { cx: 1.0 - b.cx, ..*b }).collect()
}

pub fn flip_boxes_vertical(boxes: &[BoundingBox]) -> Vec<BoundingBox> {
    boxes.iter().map(|b| BoundingBox { cy: 1.0 - b.cy, ..*b }).collect()
}

fn transform_box(b: &BoundingBox, t: &Similarity, height: usize, width: usize) -> Option<BoundingBox> {
    let (w, h) = (width as f64, height as f64);
    let (x0, y0, x1, y1) = b.corners();
    let pts = [(x0, y0), (x1, y0), (x0, y1), (x1, y1)].map(|(x, y)| t.forward(x * w, y * h));
    let min_x = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min) / w;
    let max_x = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max) / w;
    let min_y = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min) / h;
    let max_y = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max) / h;
    let full = (max_x - min_x) * (max_y - min_y);
    let clamped = BoundingBox::from_corners(b.class_id, min_x, min_y, max_x, max_y)?;
    (full > 0.0 && clamped.area() >= MIN_RETAINED_AREA * full).then_some(clamped)
}

/// Applies `params` to an image and its boxes.
pub fn apply_augment(img: &ImageU8, boxes: &[BoundingBox], params: &AugmentParams) -> Result<(ImageU8, Vec<BoundingBox>)> {
    let (h, w) = (img.height(), img.width());
    let (mut out, mut out_boxes) = if params.is_rigid_identity() {
        (img.clone(), boxes.to_vec())
    } else {
        let t = Similarity::new(params, h, w);
        (warp(img, &t)?, boxes.iter().filter_map(|b| transform_box(b, &t, h, w)).collect())
    };
    if params.flip_horizontal || params.flip_vertical {
        out = flip_pixels(&out, params.flip_horizontal, params.flip_vertical);
    }
    if params.flip_horizontal {
        out_boxes = flip_boxes_horizontal(&out_boxes);
    }
    if params.flip_vertical {
        out_boxes = flip_boxes_vertical(&out_boxes);
    }
    if params.brightness != 0 {
        for v in out.data_mut() {
            *v = (*v as i32 + params.brightness).clamp(0, 255) as u8;
        }
    }
    Ok((out, out_boxes))
}

/// Samples a transform from `cfg` and applies it.
pub fn augment<R: Rng + ?Sized>(
    img: &ImageU8,
    boxes: Option<&[BoundingBox]>,
    cfg: &AugmentConfig,
    rng: &mut R,
) -> Result<(ImageU8, Vec<BoundingBox>)> {
    cfg.validate()?;
    let params = AugmentParams::sample(cfg, rng);
    apply_augment(img, boxes.unwrap_or(&[]), &params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::sample_rng;

    fn ramp(h: usize, w: usize) -> ImageU8 {
        ImageU8::new(h, w, 3, (0..h * w * 3).map(|i| (i * 37 % 251) as u8).collect()).unwrap()
    }

    #[test]
    fn identity_config_changes_nothing() {
        let img = ramp(9, 13);
        let boxes = vec![BoundingBox::new(0, 0.3, 0.6, 0.2, 0.4).unwrap()];
        let (out, out_boxes) = augment(&img, Some(&boxes), &AugmentConfig::identity(), &mut sample_rng(1, 0)).unwrap();
        assert_eq!(out, img);
        assert_eq!(out_boxes, boxes);
    }

    #[test]
    fn horizontal_flip_mirrors_columns_and_centres() {
        let img = ramp(4, 5);
        let boxes = vec![BoundingBox::new(0, 0.2, 0.5, 0.2, 0.2).unwrap()];
        let p = AugmentParams { flip_horizontal: true, ..AugmentParams::identity() };
        let (out, b) = apply_augment(&img, &boxes, &p).unwrap();
        assert_eq!(out.pixel(1, 0), img.pixel(1, 4));
        assert!((b[0].cx - 0.8).abs() < 1e-12);
    }

    #[test]
    fn quarter_turn_swaps_box_axes() {
        let img = ramp(40, 40);
        let boxes = vec![BoundingBox::new(0, 0.25, 0.5, 0.1, 0.2).unwrap()];
        let p = AugmentParams { rotation_deg: 90.0, ..AugmentParams::identity() };
        let (_, b) = apply_augment(&img, &boxes, &p).unwrap();
        let got = [b[0].cx, b[0].cy, b[0].w, b[0].h];
        for (g, e) in got.iter().zip([0.5, 0.25, 0.2, 0.1]) {
            assert!((g - e).abs() < 1e-6, "{got:?}");
        }
    }

    #[test]
    fn quarter_turn_of_square_image_moves_pixels_exactly() {
        // A 90° turn maps pixel centres onto pixel centres, so bilinear weights
        // are 0/1 up to rounding of the trig values.
        let img = ramp(6, 6);
        let p = AugmentParams { rotation_deg: 90.0, ..AugmentParams::identity() };
        let (out, _) = apply_augment(&img, &[], &p).unwrap();
        // Content turns clockwise: the left column becomes the top row.
        for y in 0..6 {
            assert_eq!(out.pixel(0, 5 - y), img.pixel(y, 0));
        }
    }

    #[test]
    fn boxes_pushed_out_of_view_are_dropped() {
        let img = ramp(20, 20);
        let boxes = vec![BoundingBox::new(0, 0.9, 0.5, 0.1, 0.1).unwrap(), BoundingBox::new(0, 0.3, 0.5, 0.1, 0.1).unwrap()];
        let p = AugmentParams { shift_x: 0.14, ..AugmentParams::identity() };
        let (_, b) = apply_augment(&img, &boxes, &p).unwrap();
        assert_eq!(b.len(), 1);
        assert!((b[0].cx - 0.44).abs() < 1e-9);
    }

    #[test]
    fn brightness_is_additive_and_clamped() {
        let img = ImageU8::new(1, 2, 1, vec![10, 250]).unwrap();
        let p = AugmentParams { brightness: 10, ..AugmentParams::identity() };
        assert_eq!(apply_augment(&img, &[], &p).unwrap().0.data(), &[20, 255]);
    }

    #[test]
    fn reflect_padding_mirrors_about_edges() {
        assert_eq!(reflect(-1.0, 5), 0.0);
        assert_eq!(reflect(-2.0, 5), 1.0);
        assert_eq!(reflect(5.0, 5), 4.0);
        assert_eq!(reflect(6.0, 5), 3.0);
        assert_eq!(reflect(2.25, 5), 2.25);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = AugmentConfig::identity();
        c.rotation_deg = (10.0, -10.0);
        assert!(c.validate().is_err());
        c = AugmentConfig::identity();
        c.flip_vertical = 1.5;
        assert!(c.validate().is_err());
        c = AugmentConfig::identity();
        c.rotation_deg = (-120.0, 0.0);
        assert!(c.validate().is_err());
        assert!(AugmentConfig::classifier_default().validate().is_ok());
    }
}
