//! Contrast-limited adaptive histogram equalization on one 8-bit plane.
//!
//! The plane is split into a `rows × cols` grid of equal tiles. When the grid
//! does not divide the image, the image is extended on the bottom and right by
//! repeating its last row and column until it does. For each tile:
//!
//! 1. build a 256-bin histogram;
//! 2. clip every bin at `clip_limit × tile_pixels / 256` and spread the total
//!    clipped mass evenly over all 256 bins in a single pass (bins may end up
//!    above the limit again);
//! 3. map level `v` to `⌊255 · cdf(v) / tile_pixels + ½⌋`.
//!
//! An output pixel blends the mappings of the four nearest tile centres
//! bilinearly. Tile `i` is centred at `(i + ½)·t` in continuous coordinates
//! where pixel `y` sits at `y + ½`, so the blend weights are multiples of
//! `1 / 2t` and the blend is computed exactly in integers, then rounded half
//! up. Pixels beyond the outermost centres use the nearest tile(s).

use crate::error::{ImageError, Result};
use crate::image::ImageU8;

pub const LEVELS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileGrid {
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClaheConfig {
    pub grid: TileGrid,
    /// Multiple of the uniform bin height at which bins are clipped.
    pub clip_limit: f64,
}

impl Default for ClaheConfig {
    fn default() -> Self {
        Self {
            grid: TileGrid { rows: 8, cols: 8 },
            clip_limit: 2.0,
        }
    }
}

impl ClaheConfig {
    /// One tile and a limit no histogram can reach: plain histogram equalization.
    pub fn unclipped_single_tile() -> Self {
        Self {
            grid: TileGrid { rows: 1, cols: 1 },
            clip_limit: LEVELS as f64 + 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.rows == 0 || self.grid.cols == 0 {
            return Err(ImageError::Config(format!("tile grid {:?} must be positive", self.grid)));
        }
        if !(self.clip_limit >= 1.0) || !self.clip_limit.is_finite() {
            return Err(ImageError::Config(format!("clip limit {} must be ≥ 1", self.clip_limit)));
        }
        Ok(())
    }
}

/// Tile layout of a plane under a grid, after edge-replication padding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileGeometry {
    pub height: usize,
    pub width: usize,
    pub rows: usize,
    pub cols: usize,
    pub tile_h: usize,
    pub tile_w: usize,
}

impl TileGeometry {
    pub fn new(height: usize, width: usize, grid: TileGrid) -> Self {
        Self {
            height,
            width,
            rows: grid.rows,
            cols: grid.cols,
            tile_h: height.div_ceil(grid.rows),
            tile_w: width.div_ceil(grid.cols),
        }
    }

    pub fn tile_pixels(&self) -> usize {
        self.tile_h * self.tile_w
    }

    /// Neighbouring tile indices along one axis and the weight numerator of
    /// the second one, out of `2 · tile`.
    pub(crate) fn axis_blend(pos: usize, tile: usize, count: usize) -> (usize, usize, u64) {
        let twice = 2 * tile as i64;
        let offset = 2 * pos as i64 + 1 - tile as i64;
        let lo = offset.div_euclid(twice);
        let rem = offset.rem_euclid(twice) as u64;
        if lo < 0 {
            (0, 0, 0)
        } else if lo as usize >= count - 1 {
            (count - 1, count - 1, 0)
        } else {
            (lo as usize, lo as usize + 1, rem)
        }
    }
}

/// Clip each bin at `limit`, then add `excess / bins` to every bin.
pub fn clip_and_redistribute(hist: &[f64], limit: f64) -> Vec<f64> {
    let mut excess = 0.0;
    let mut clipped: Vec<f64> = hist
        .iter()
        .map(|&h| {
            if h > limit {
                excess += h - limit;
                limit
            } else {
                h
            }
        })
        .collect();
    let share = excess / hist.len() as f64;
    clipped.iter_mut().for_each(|b| *b += share);
    clipped
}

/// Level mapping from a (possibly clipped) histogram of `total` pixels.
pub(crate) fn cdf_lut(bins: &[f64], total: usize) -> [u8; LEVELS] {
    let mut lut = [0u8; LEVELS];
    let scale = 255.0 / total as f64;
    let mut cdf = 0.0f64;
    for (v, &b) in bins.iter().enumerate() {
        cdf += b;
        lut[v] = (cdf * scale + 0.5).floor().clamp(0.0, 255.0) as u8;
    }
    lut
}

/// Identity mapping used for single-level regions, which carry no contrast
/// to redistribute.
fn identity_lut() -> [u8; LEVELS] {
    std::array::from_fn(|v| v as u8)
}

fn single_level<T: Copy + Default + PartialEq>(hist: &[T]) -> bool {
    hist.iter().filter(|&&c| c != T::default()).count() <= 1
}

pub(crate) fn tile_lut(hist: &[u32; LEVELS], tile_pixels: usize, clip_limit: f64) -> [u8; LEVELS] {
    if single_level(hist) {
        return identity_lut();
    }
    let limit = clip_limit * tile_pixels as f64 / LEVELS as f64;
    let bins: Vec<f64> = hist.iter().map(|&c| c as f64).collect();
    cdf_lut(&clip_and_redistribute(&bins, limit), tile_pixels)
}

/// Exact bilinear blend of four mapped levels with weights out of `2th × 2tw`.
pub(crate) fn blend(l00: u8, l01: u8, l10: u8, l11: u8, ry: u64, rx: u64, th: usize, tw: usize) -> u8 {
    let (ty, tx) = (2 * th as u64, 2 * tw as u64);
    let num = (ty - ry) * ((tx - rx) * l00 as u64 + rx * l01 as u64)
        + ry * ((tx - rx) * l10 as u64 + rx * l11 as u64);
    let den = ty * tx;
    ((num + den / 2) / den) as u8
}

pub fn clahe_channel(channel: &ImageU8, cfg: &ClaheConfig) -> Result<ImageU8> {
    channel.require_channels(1)?;
    cfg.validate()?;
    let (h, w) = (channel.height(), channel.width());
    let geo = TileGeometry::new(h, w, cfg.grid);
    let src = channel.data();

    let mut luts = Vec::with_capacity(geo.rows * geo.cols);
    for tr in 0..geo.rows {
        for tc in 0..geo.cols {
            let mut hist = [0u32; LEVELS];
            for py in tr * geo.tile_h..(tr + 1) * geo.tile_h {
                let row = &src[py.min(h - 1) * w..(py.min(h - 1) + 1) * w];
                let x0 = tc * geo.tile_w;
                let x1 = (tc + 1) * geo.tile_w;
                // In-image columns, then the replicated last column.
                for &v in &row[x0.min(w)..x1.min(w)] {
                    hist[v as usize] += 1;
                }
                if x1 > w {
                    let padded = (x1 - x0.max(w)) as u32;
                    hist[row[w - 1] as usize] += padded;
                }
            }
            luts.push(tile_lut(&hist, geo.tile_pixels(), cfg.clip_limit));
        }
    }

    let x_blend: Vec<_> = (0..w).map(|x| TileGeometry::axis_blend(x, geo.tile_w, geo.cols)).collect();
    let mut out = vec![0u8; h * w];
    for y in 0..h {
        let (r0, r1, ry) = TileGeometry::axis_blend(y, geo.tile_h, geo.rows);
        let (top, bottom) = (&luts[r0 * geo.cols..], &luts[r1 * geo.cols..]);
        for (x, &(c0, c1, rx)) in x_blend.iter().enumerate() {
            let v = src[y * w + x] as usize;
            out[y * w + x] = blend(top[c0][v], top[c1][v], bottom[c0][v], bottom[c1][v], ry, rx, geo.tile_h, geo.tile_w);
        }
    }
    ImageU8::new(h, w, 1, out)
}

/// Global histogram equalization: `⌊255 · cdf(v) / N + ½⌋`. A constant plane
/// is returned unchanged.
pub fn equalize_histogram(channel: &ImageU8) -> Result<ImageU8> {
    channel.require_channels(1)?;
    let mut hist = [0f64; LEVELS];
    for &v in channel.data() {
        hist[v as usize] += 1.0;
    }
    let lut = if single_level(&hist) { identity_lut() } else { cdf_lut(&hist, channel.pixel_count()) };
    let data = channel.data().iter().map(|&v| lut[v as usize]).collect();
    ImageU8::new(channel.height(), channel.width(), 1, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_clip_and_redistribute() {
        let out = clip_and_redistribute(&[10.0, 2.0, 0.0, 0.0], 4.0);
        assert_eq!(out, vec![5.5, 3.5, 1.5, 1.5]);
    }

    #[test]
    fn unclipped_single_tile_is_global_equalization() {
        let data: Vec<u8> = (0..37 * 23).map(|i| ((i * 7) % 61 + (i / 50) * 3) as u8).collect();
        let img = ImageU8::new(37, 23, 1, data).unwrap();
        let a = clahe_channel(&img, &ClaheConfig::unclipped_single_tile()).unwrap();
        let b = equalize_histogram(&img).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tile_centres_get_their_own_mapping() {
        assert_eq!(TileGeometry::axis_blend(3, 8, 4), (0, 0, 0));
        // Pixel 11 sits at 11.5, between centres 4 and 12: 15/16 of the way to tile 1.
        assert_eq!(TileGeometry::axis_blend(11, 8, 4), (0, 1, 15));
        assert_eq!(TileGeometry::axis_blend(31, 8, 4), (3, 3, 0));
    }

    #[test]
    fn blend_is_exact_at_corners_and_midpoints() {
        assert_eq!(blend(10, 20, 30, 40, 0, 0, 4, 4), 10);
        assert_eq!(blend(10, 20, 30, 40, 4, 4, 4, 4), 25);
        assert_eq!(blend(0, 1, 0, 1, 0, 4, 4, 4), 1); // 0.5 rounds up
    }

    #[test]
    fn constant_plane_is_unchanged() {
        let img = ImageU8::filled(40, 40, 1, 100).unwrap();
        let out = clahe_channel(&img, &ClaheConfig::default()).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn grid_larger_than_image_is_padded() {
        let img = ImageU8::new(3, 5, 1, (0..15).map(|v| v as u8 * 10).collect()).unwrap();
        let out = clahe_channel(&img, &ClaheConfig::default()).unwrap();
        assert_eq!((out.height(), out.width()), (3, 5));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let img = ImageU8::filled(4, 4, 1, 0).unwrap();
        let bad = [
            ClaheConfig { clip_limit: 0.5, ..Default::default() },
            ClaheConfig { clip_limit: f64::NAN, ..Default::default() },
            ClaheConfig { grid: TileGrid { rows: 0, cols: 2 }, ..Default::default() },
        ];
        for cfg in bad {
            assert!(clahe_channel(&img, &cfg).is_err());
        }
        assert!(clahe_channel(&ImageU8::filled(4, 4, 3, 0).unwrap(), &ClaheConfig::default()).is_err());
    }
}
