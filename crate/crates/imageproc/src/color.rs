//! RGB ↔ HSV on 8-bit planes, grayscale conversion and colour CLAHE.
//!
//! Hue spans the full byte: `H = round(hue° · 256 / 360) mod 256`, so one
//! step is 1.40625°. Saturation and value are scaled to `[0, 255]`. Gray
//! pixels get hue 0.

use crate::clahe::{clahe_channel, ClaheConfig};
use crate::error::Result;
use crate::image::ImageU8;

/// Which HSV plane [`clahe_color`] equalizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HsvChannel {
    #[default]
    Hue,
    Saturation,
    Value,
}

impl HsvChannel {
    fn index(self) -> usize {
        match self {
            HsvChannel::Hue => 0,
            HsvChannel::Saturation => 1,
            HsvChannel::Value => 2,
        }
    }
}

fn rgb_pixel_to_hsv(r: u8, g: u8, b: u8) -> [u8; 3] {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = (max - min) as f64;
    if max == 0 || delta == 0.0 {
        return [0, 0, max];
    }
    let s = (255.0 * delta / max as f64).round() as u8;
    let (r, g, b) = (r as f64, g as f64, b as f64);
    let sector = if max as f64 == r {
        (g - b) / delta
    } else if max as f64 == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    let degrees = (60.0 * sector).rem_euclid(360.0);
    let h = (degrees * 256.0 / 360.0).round() as u32 % 256;
    [h as u8, s, max]
}

fn hsv_pixel_to_rgb(h: u8, s: u8, v: u8) -> [u8; 3] {
    if s == 0 {
        return [v, v, v];
    }
    let hue = h as f64 * 360.0 / 256.0 / 60.0;
    let sector = hue.floor();
    let frac = hue - sector;
    let v_f = v as f64;
    let s_f = s as f64 / 255.0;
    let p = v_f * (1.0 - s_f);
    let q = v_f * (1.0 - s_f * frac);
    let t = v_f * (1.0 - s_f * (1.0 - frac));
    let (r, g, b) = match sector as u32 % 6 {
        0 => (v_f, t, p),
        1 => (q, v_f, p),
        2 => (p, v_f, t),
        3 => (p, q, v_f),
        4 => (t, p, v_f),
        _ => (v_f, p, q),
    };
    let q8 = |x: f64| x.round().clamp(0.0, 255.0) as u8;
    [q8(r), q8(g), q8(b)]
}

fn map_pixels(img: &ImageU8, f: impl Fn(u8, u8, u8) -> [u8; 3]) -> Result<ImageU8> {
    img.require_channels(3)?;
    let mut data = Vec::with_capacity(img.data().len());
    for px in img.data().chunks_exact(3) {
        data.extend_from_slice(&f(px[0], px[1], px[2]));
    }
    ImageU8::new(img.height(), img.width(), 3, data)
}

pub fn rgb_to_hsv(img: &ImageU8) -> Result<ImageU8> {
    map_pixels(img, rgb_pixel_to_hsv)
}

pub fn hsv_to_rgb(img: &ImageU8) -> Result<ImageU8> {
    map_pixels(img, hsv_pixel_to_rgb)
}

/// BT.601 luma, `round(0.299 R + 0.587 G + 0.114 B)`, in exact integer arithmetic.
pub fn to_gray(img: &ImageU8) -> Result<ImageU8> {
    img.require_channels(3)?;
    let data = img
        .data()
        .chunks_exact(3)
        .map(|px| ((299 * px[0] as u32 + 587 * px[1] as u32 + 114 * px[2] as u32 + 500) / 1000) as u8)
        .collect();
    ImageU8::new(img.height(), img.width(), 1, data)
}

/// Convert to HSV, equalize one plane with CLAHE, convert back to RGB.
pub fn clahe_color(img: &ImageU8, cfg: &ClaheConfig, channel: HsvChannel) -> Result<ImageU8> {
    let hsv = rgb_to_hsv(img)?;
    let mut planes = [hsv.channel(0)?, hsv.channel(1)?, hsv.channel(2)?];
    let idx = channel.index();
    planes[idx] = clahe_channel(&planes[idx], cfg)?;
    let merged = ImageU8::from_planes(&[&planes[0], &planes[1], &planes[2]])?;
    hsv_to_rgb(&merged)
}
