use std::fmt;
use std::str::FromStr;

use leakspot_tensor::Tensor;

use crate::clahe::{clahe_channel, ClaheConfig};
use crate::color::{clahe_color, to_gray, HsvChannel};
use crate::error::{ImageError, Result};
use crate::image::ImageU8;

/// The four presentations of a crop fed to the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PreprocessVariant {
    Original,
    Clahe,
    GrayThenClahe,
    ClaheThenGray,
}

impl PreprocessVariant {
    pub const ALL: [PreprocessVariant; 4] = [
        PreprocessVariant::Original,
        PreprocessVariant::Clahe,
        PreprocessVariant::GrayThenClahe,
        PreprocessVariant::ClaheThenGray,
    ];

    pub fn output_channels(self) -> usize {
        match self {
            PreprocessVariant::Original | PreprocessVariant::Clahe => 3,
            PreprocessVariant::GrayThenClahe | PreprocessVariant::ClaheThenGray => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PreprocessVariant::Original => "original",
            PreprocessVariant::Clahe => "clahe",
            PreprocessVariant::GrayThenClahe => "gray-clahe",
            PreprocessVariant::ClaheThenGray => "clahe-gray",
        }
    }
}

impl fmt::Display for PreprocessVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PreprocessVariant {
    type Err = ImageError;

    fn from_str(s: &str) -> Result<Self> {
        PreprocessVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                ImageError::Config(format!(
                    "unknown preprocess variant {s:?} (expected original, clahe, gray-clahe or clahe-gray)"
                ))
            })
    }
}

/// Apply a presentation to an RGB crop, equalizing hue for the colour CLAHE step.
pub fn preprocess(img: &ImageU8, variant: PreprocessVariant, cfg: &ClaheConfig) -> Result<ImageU8> {
    preprocess_with_channel(img, variant, cfg, HsvChannel::Hue)
}

pub fn preprocess_with_channel(
    img: &ImageU8,
    variant: PreprocessVariant,
    cfg: &ClaheConfig,
    channel: HsvChannel,
) -> Result<ImageU8> {
    match variant {
        PreprocessVariant::Original => Ok(img.clone()),
        PreprocessVariant::Clahe => clahe_color(img, cfg, channel),
        PreprocessVariant::GrayThenClahe => clahe_channel(&to_gray(img)?, cfg),
        PreprocessVariant::ClaheThenGray => to_gray(&clahe_color(img, cfg, channel)?),
    }
}

/// Scale to `[0, 1]` by dividing by 255 and reorder to channel-major `C × H × W`.
pub fn normalize(img: &ImageU8) -> Result<Tensor> {
    let (h, w, c) = (img.height(), img.width(), img.channels());
    let mut data = vec![0.0f32; h * w * c];
    for (i, px) in img.data().chunks_exact(c).enumerate() {
        for (ch, &v) in px.iter().enumerate() {
            data[ch * h * w + i] = v as f32 / 255.0;
        }
    }
    Ok(Tensor::new(vec![c, h, w], data)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ImageU8 {
        let data = (0..16 * 16 * 3).map(|i| ((i * 37) % 251) as u8).collect();
        ImageU8::new(16, 16, 3, data).unwrap()
    }

    #[test]
    fn original_is_a_copy() {
        let img = sample();
        assert_eq!(preprocess(&img, PreprocessVariant::Original, &ClaheConfig::default()).unwrap(), img);
    }

    #[test]
    fn output_channel_contract() {
        let img = sample();
        for v in PreprocessVariant::ALL {
            let out = preprocess(&img, v, &ClaheConfig::default()).unwrap();
            assert_eq!(out.channels(), v.output_channels(), "{v}");
            assert_eq!((out.height(), out.width()), (16, 16));
        }
    }

    #[test]
    fn names_round_trip() {
        for v in PreprocessVariant::ALL {
            assert_eq!(v.name().parse::<PreprocessVariant>().unwrap(), v);
        }
        assert!("sepia".parse::<PreprocessVariant>().is_err());
    }

    #[test]
    fn normalize_divides_by_255_channel_major() {
        let img = ImageU8::new(1, 2, 3, vec![255, 0, 128, 1, 2, 3]).unwrap();
        let t = normalize(&img).unwrap();
        assert_eq!(t.shape(), &[3, 1, 2]);
        assert_eq!(t.data()[0], 1.0);
        assert_eq!(t.data()[2], 0.0);
        assert!((t.data()[4] - 0.501_960_8).abs() < 1e-6);
        assert_eq!(t.data()[1], 1.0 / 255.0);
        assert!(t.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
