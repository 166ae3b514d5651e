//! Procedural stand-in for photographs of a damper body: a bright, shaded
//! capsule on a textured low-saturation background. Anomalous samples carry
//! one to three saturated green stains on the capsule surface.
//!
//! Every sample is a pure function of `(seed, index, label)`; labels are
//! assigned by a seeded shuffle of the configured class counts.

use std::f64::consts::PI;

use leakspot_imageproc::ImageU8;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::bbox::{BoundingBox, ClassLabel};
use crate::error::{DatasetError, Result};
use crate::rng::sample_rng;
use crate::split::SplitRatios;

const PALETTE_SIZE: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub normal: usize,
    pub anomaly: usize,
    pub height: usize,
    pub width: usize,
    /// Selects the set of background base colours.
    pub palette_seed: u64,
    /// Range of the peak blend weight of a stain over the surface, in (0, 1].
    pub blob_intensity: (f64, f64),
    pub seed: u64,
    /// Per-class split of the generated samples.
    pub split: SplitRatios,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            normal: 400,
            anomaly: 400,
            height: 160,
            width: 160,
            palette_seed: 11,
            blob_intensity: (0.75, 1.0),
            seed: 7,
            split: SplitRatios::default(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.height < 32 || self.width < 32 {
            return Err(DatasetError::Config(format!("synthetic images must be at least 32x32, got {}x{}", self.height, self.width)));
        }
        let (lo, hi) = self.blob_intensity;
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return Err(DatasetError::Config(format!("blob intensity range ({lo}, {hi}) must satisfy 0 < lo <= hi <= 1")));
        }
        self.split.validate()
    }

    pub fn total(&self) -> usize {
        self.normal + self.anomaly
    }

    /// Class of every sample index.
    pub fn labels(&self) -> Vec<ClassLabel> {
        let mut labels = vec![ClassLabel::Normal; self.normal];
        labels.extend(std::iter::repeat(ClassLabel::Anomaly).take(self.anomaly));
        labels.shuffle(&mut sample_rng(self.seed, u64::MAX));
        labels
    }

    pub fn stem(index: usize) -> String {
        format!("synth_{index:05}")
    }
}

/// A generated image with its label, box and ground-truth masks
/// (row-major, one flag per pixel).
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSample {
    pub image: ImageU8,
    pub boxes: Vec<BoundingBox>,
    pub label: ClassLabel,
    pub shape_mask: Vec<bool>,
    pub stain_mask: Vec<bool>,
}

struct Wave {
    amplitude: f64,
    kx: f64,
    ky: f64,
    phase: f64,
}

struct Capsule {
    cx: f64,
    cy: f64,
    ux: f64,
    uy: f64,
    half_length: f64,
    radius: f64,
}

impl Capsule {
    /// Position along the axis and signed distance across it.
    fn local(&self, x: f64, y: f64) -> (f64, f64) {
        let (dx, dy) = (x - self.cx, y - self.cy);
        (dx * self.ux + dy * self.uy, -dx * self.uy + dy * self.ux)
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        let (along, across) = self.local(x, y);
        let beyond = (along.abs() - self.half_length).max(0.0);
        beyond * beyond + across * across <= self.radius * self.radius
    }
}

struct Stain {
    cx: f64,
    cy: f64,
    cos: f64,
    sin: f64,
    ra: f64,
    rb: f64,
    peak: f64,
    rgb: [f64; 3],
}

impl Stain {
    fn weight(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.cx, y - self.cy);
        let (u, v) = (dx * self.cos + dy * self.sin, -dx * self.sin + dy * self.cos);
        let q = ((u / self.ra).powi(2) + (v / self.rb).powi(2)).sqrt();
        if q >= 1.0 {
            0.0
        } else {
            self.peak * (2.5 * (1.0 - q)).min(1.0)
        }
    }
}

fn palette(seed: u64) -> Vec<[f64; 3]> {
    let mut rng = sample_rng(seed, 0);
    (0..PALETTE_SIZE)
        .map(|_| {
            let g: f64 = rng.gen_range(70.0..150.0);
            [g + rng.gen_range(-10.0..10.0), g + rng.gen_range(-10.0..10.0), g + rng.gen_range(-10.0..10.0)]
        })
        .collect()
}

/// Renders sample `index` with the given class.
pub fn synth_sample(cfg: &SynthConfig, index: usize, label: ClassLabel) -> Result<SynthSample> {
    cfg.validate()?;
    let (h, w) = (cfg.height, cfg.width);
    let mut rng = sample_rng(cfg.seed, index as u64);
    let base = palette(cfg.palette_seed)[rng.gen_range(0..PALETTE_SIZE)];

    let waves: Vec<Wave> = (0..3)
        .map(|_| {
            let dir: f64 = rng.gen_range(0.0..PI);
            let wavelength: f64 = rng.gen_range(16.0..64.0);
            let k = 2.0 * PI / wavelength;
            Wave { amplitude: rng.gen_range(4.0..10.0), kx: k * dir.cos(), ky: k * dir.sin(), phase: rng.gen_range(0.0..2.0 * PI) }
        })
        .collect();

    let min_dim = h.min(w) as f64;
    let angle: f64 = rng.gen_range(0.0..PI);
    let half_length = rng.gen_range(0.22..0.32) * min_dim;
    let radius = rng.gen_range(0.09..0.14) * min_dim;
    let (ux, uy) = (angle.cos(), angle.sin());
    let ex = half_length * ux.abs() + radius + 3.0;
    let ey = half_length * uy.abs() + radius + 3.0;
    let capsule = Capsule {
        cx: rng.gen_range(ex..=(w as f64 - ex).max(ex)),
        cy: rng.gen_range(ey..=(h as f64 - ey).max(ey)),
        ux,
        uy,
        half_length,
        radius,
    };
    let metal = rng.gen_range(190.0..235.0);
    let tint = [metal, metal - rng.gen_range(0.0..12.0), metal - rng.gen_range(5.0..25.0)];
    let groove_period: f64 = rng.gen_range(10.0..16.0);

    let stains: Vec<Stain> = if label.is_anomaly() {
        let n = rng.gen_range(1..=3);
        (0..n)
            .map(|_| {
                let along = rng.gen_range(-0.8..0.8) * half_length;
                let across = rng.gen_range(-0.45..0.45) * radius;
                let psi: f64 = rng.gen_range(0.0..PI);
                Stain {
                    cx: capsule.cx + along * ux - across * uy,
                    cy: capsule.cy + along * uy + across * ux,
                    cos: psi.cos(),
                    sin: psi.sin(),
                    ra: rng.gen_range(0.45..0.85) * radius,
                    rb: rng.gen_range(0.35..0.7) * radius,
                    peak: rng.gen_range(cfg.blob_intensity.0..=cfg.blob_intensity.1),
                    rgb: [rng.gen_range(20.0..70.0), rng.gen_range(190.0..250.0), rng.gen_range(30.0..90.0)],
                }
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut data = Vec::with_capacity(h * w * 3);
    let mut shape_mask = vec![false; h * w];
    let mut stain_mask = vec![false; h * w];
    let (mut x_min, mut x_max, mut y_min, mut y_max) = (w, 0, h, 0);
    for y in 0..h {
        for x in 0..w {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let texture: f64 = waves.iter().map(|wv| wv.amplitude * (wv.kx * px + wv.ky * py + wv.phase).sin()).sum();
            let grain = rng.gen_range(-6.0..6.0);
            let mut rgb = [0.0; 3];
            for c in 0..3 {
                rgb[c] = base[c] + texture + grain + rng.gen_range(-3.0..3.0);
            }
            if capsule.contains(px, py) {
                let i = y * w + x;
                shape_mask[i] = true;
                (x_min, x_max, y_min, y_max) = (x_min.min(x), x_max.max(x), y_min.min(y), y_max.max(y));
                let (along, across) = capsule.local(px, py);
                let n = (across / radius).clamp(-1.0, 1.0);
                let mut shade = 0.55 + 0.45 * (1.0 - n * n).sqrt();
                if (along + half_length).rem_euclid(groove_period) < 2.0 {
                    shade *= 0.82;
                }
                let highlight = 40.0 * (-((n + 0.35) / 0.15).powi(2)).exp();
                for c in 0..3 {
                    rgb[c] = tint[c] * shade + highlight + grain * 0.5;
                }
                let mut alpha = 0.0f64;
                let mut stain_rgb = [0.0; 3];
                for s in &stains {
                    let a = s.weight(px, py);
                    if a > alpha {
                        alpha = a;
                        stain_rgb = s.rgb;
                    }
                }
                if alpha > 0.0 {
                    for c in 0..3 {
                        rgb[c] = (1.0 - alpha) * rgb[c] + alpha * stain_rgb[c] * (0.75 + 0.25 * shade);
                    }
                    stain_mask[i] = alpha >= 0.5;
                }
            }
            data.extend(rgb.iter().map(|v| v.round().clamp(0.0, 255.0) as u8));
        }
    }

    let (fw, fh) = (w as f64, h as f64);
    let bbox = BoundingBox::from_corners(0, x_min as f64 / fw, y_min as f64 / fh, (x_max + 1) as f64 / fw, (y_max + 1) as f64 / fh)
        .ok_or_else(|| DatasetError::Config("generated shape is empty".into()))?;
    Ok(SynthSample { image: ImageU8::new(h, w, 3, data)?, boxes: vec![bbox], label, shape_mask, stain_mask })
}

/// Writes a complete synthetic dataset under `dir` (see [`crate::Dataset`]
/// for the layout) and returns it.
pub fn synth_generate(cfg: &SynthConfig, dir: &std::path::Path) -> Result<crate::Dataset> {
    let ds = crate::Dataset::synthesize(cfg)?;
    ds.save(dir)?;
    Ok(ds)
}
