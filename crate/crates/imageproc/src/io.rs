//! Binary PNM (P5 gray / P6 RGB, maxval 255) and 8-bit PNG ingestion.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use crate::error::{ImageError, Result};
use crate::image::ImageU8;

/// Serialize as `P6` (RGB) or `P5` (gray): `P6\n<w> <h>\n255\n` then raw samples.
pub fn encode_pnm(img: &ImageU8) -> Vec<u8> {
    let magic = if img.channels() == 3 { "P6" } else { "P5" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Result<&str> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ImageError::Format("truncated PNM header".into()));
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| ImageError::Format("non-ASCII PNM header".into()))
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token()?;
        tok.parse()
            .map_err(|_| ImageError::Format(format!("bad PNM {what}: {tok:?}")))
    }
}

pub fn decode_pnm(bytes: &[u8]) -> Result<ImageU8> {
    let mut cur = HeaderCursor { bytes, pos: 0 };
    let channels = match cur.token()? {
        "P6" => 3,
        "P5" => 1,
        other => return Err(ImageError::Format(format!("unsupported PNM magic {other:?}"))),
    };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(ImageError::Format(format!("maxval {maxval} (only 255 is supported)")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
        return Err(ImageError::Format("missing separator after PNM header".into()));
    }
    let raster = &bytes[cur.pos + 1..];
    let need = width * height * channels;
    if raster.len() != need {
        return Err(ImageError::Format(format!("PNM raster has {} bytes, expected {need}", raster.len())));
    }
    ImageU8::new(height, width, channels, raster.to_vec())
}

pub fn write_pnm(path: &Path, img: &ImageU8) -> Result<()> {
    let mut f = File::create(path)?;
    f.write_all(&encode_pnm(img))?;
    Ok(())
}

pub fn read_pnm(path: &Path) -> Result<ImageU8> {
    decode_pnm(&std::fs::read(path)?)
}

/// Read an 8-bit RGB or grayscale PNG. Alpha, palette and 16-bit files are rejected.
pub fn read_png(path: &Path) -> Result<ImageU8> {
    let decoder = png::Decoder::new(BufReader::new(File::open(path)?));
    let mut reader = decoder
        .read_info()
        .map_err(|e| ImageError::Format(format!("PNG: {e}")))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| ImageError::Format("PNG too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| ImageError::Format(format!("PNG: {e}")))?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(ImageError::Format(format!("PNG bit depth {:?} (only 8 is supported)", info.bit_depth)));
    }
    let channels = match info.color_type {
        png::ColorType::Rgb => 3,
        png::ColorType::Grayscale => 1,
        other => return Err(ImageError::Format(format!("PNG colour type {other:?} (RGB or gray only)"))),
    };
    let (w, h) = (info.width as usize, info.height as usize);
    let mut data = Vec::with_capacity(w * h * channels);
    for row in buf.chunks(info.line_size).take(h) {
        data.extend_from_slice(&row[..w * channels]);
    }
    ImageU8::new(h, w, channels, data)
}

/// Dispatch on extension: `.ppm`/`.pgm`/`.pnm` or `.png`.
pub fn read_image(path: &Path) -> Result<ImageU8> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("ppm" | "pgm" | "pnm") => read_pnm(path),
        Some("png") => read_png(path),
        _ => Err(ImageError::Format(format!("unrecognised image extension: {}", path.display()))),
    }
}

/// True for the file extensions [`read_image`] accepts.
pub fn is_image_path(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("ppm" | "pgm" | "pnm" | "png")
    )
}
