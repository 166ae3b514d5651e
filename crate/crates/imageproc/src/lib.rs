//! Pixel-level preprocessing for the leak classifier.
//!
//! Images are interleaved row-major `u8` buffers with one (luma) or three
//! (RGB) channels. The crate covers colour-space conversion, contrast-limited
//! adaptive histogram equalization, resizing, conversion to network input
//! tensors and lossless PNM interchange.

mod clahe;
mod color;
mod error;
mod image;
pub mod io;
mod preprocess;
mod resize;

#[cfg(any(test, feature = "reference"))]
pub mod reference;

pub use clahe::{clahe_channel, clip_and_redistribute, equalize_histogram, ClaheConfig, TileGrid};
pub use color::{clahe_color, hsv_to_rgb, rgb_to_hsv, to_gray, HsvChannel};
pub use error::{ImageError, Result};
pub use image::ImageU8;
pub use preprocess::{normalize, preprocess, PreprocessVariant};
pub use resize::resize_bilinear;
