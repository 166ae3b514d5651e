//! Naive per-pixel CLAHE.
//!
//! For every output pixel this walks the tile centres to find its
//! neighbours, rebuilds each neighbour's padded tile pixel list from scratch,
//! and evaluates the clip/redistribute/CDF rule directly. It is quadratic in
//! the tile size and only meant for small images.

use crate::{ClaheConfig, ImageU8};

fn padded_tile(img: &ImageU8, tr: usize, tc: usize, th: usize, tw: usize) -> Vec<u8> {
    let (h, w) = (img.height(), img.width());
    let mut px = Vec::with_capacity(th * tw);
    for y in tr * th..(tr + 1) * th {
        for x in tc * tw..(tc + 1) * tw {
            let sy = if y < h { y } else { h - 1 };
            let sx = if x < w { x } else { w - 1 };
            px.push(img.get(sy, sx, 0));
        }
    }
    px
}

fn mapped_level(tile: &[u8], level: u8, clip_limit: f64) -> u8 {
    let n = tile.len();
    let mut counts = vec![0.0f64; 256];
    for &p in tile {
        counts[p as usize] += 1.0;
    }
    if counts.iter().filter(|&&c| c > 0.0).count() == 1 {
        return level;
    }
    let limit = clip_limit * n as f64 / 256.0;
    let mut excess = 0.0f64;
    for c in counts.iter_mut() {
        if *c > limit {
            excess += *c - limit;
            *c = limit;
        }
    }
    let add = excess / 256.0;
    let mut cdf = 0.0f64;
    for c in counts.iter().take(level as usize + 1) {
        cdf += *c + add;
    }
    let v = (cdf * (255.0 / n as f64) + 0.5).floor();
    v.clamp(0.0, 255.0) as u8
}

/// Neighbour tiles along one axis and the second tile's weight in units of
/// `1 / 2t`: position and centres are measured in half-pixels.
fn neighbours(pos: usize, tile: usize, count: usize) -> (usize, usize, u64) {
    let p = 2 * pos + 1;
    let centre = |i: usize| (2 * i + 1) * tile;
    if p <= centre(0) {
        return (0, 0, 0);
    }
    if p >= centre(count - 1) {
        return (count - 1, count - 1, 0);
    }
    let mut i = 0;
    while centre(i + 1) <= p {
        i += 1;
    }
    (i, i + 1, (p - centre(i)) as u64)
}

pub fn clahe_channel_naive(img: &ImageU8, cfg: &ClaheConfig) -> ImageU8 {
    assert_eq!(img.channels(), 1);
    let (h, w) = (img.height(), img.width());
    let (rows, cols) = (cfg.grid.rows, cfg.grid.cols);
    let th = (h + rows - 1) / rows;
    let tw = (w + cols - 1) / cols;
    let mut out = Vec::with_capacity(h * w);
    for y in 0..h {
        for x in 0..w {
            let v = img.get(y, x, 0);
            let (r0, r1, wy) = neighbours(y, th, rows);
            let (c0, c1, wx) = neighbours(x, tw, cols);
            let m = |r, c| mapped_level(&padded_tile(img, r, c, th, tw), v, cfg.clip_limit) as u64;
            let (sy, sx) = (2 * th as u64, 2 * tw as u64);
            let num = (sy - wy) * (sx - wx) * m(r0, c0)
                + (sy - wy) * wx * m(r0, c1)
                + wy * (sx - wx) * m(r1, c0)
                + wy * wx * m(r1, c1);
            let den = sy * sx;
            out.push(((2 * num + den) / (2 * den)) as u8);
        }
    }
    ImageU8::new(h, w, 1, out).unwrap()
}

/// Clipped-and-redistributed histogram mass of every tile, for conservation checks.
pub fn tile_masses(img: &ImageU8, cfg: &ClaheConfig) -> Vec<(f64, usize)> {
    let (h, w) = (img.height(), img.width());
    let th = (h + cfg.grid.rows - 1) / cfg.grid.rows;
    let tw = (w + cfg.grid.cols - 1) / cfg.grid.cols;
    let mut masses = Vec::new();
    for r in 0..cfg.grid.rows {
        for c in 0..cfg.grid.cols {
            let tile = padded_tile(img, r, c, th, tw);
            let mut counts = vec![0.0f64; 256];
            for &p in &tile {
                counts[p as usize] += 1.0;
            }
            let limit = cfg.clip_limit * tile.len() as f64 / 256.0;
            let bins = crate::clip_and_redistribute(&counts, limit);
            masses.push((bins.iter().sum(), tile.len()));
        }
    }
    masses
}
