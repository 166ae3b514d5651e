use leakspot_dataset::{BoundingBox, ClassLabel, Sample};
use leakspot_detection::crop;
use leakspot_imageproc::{normalize, preprocess, resize_bilinear, ClaheConfig, ImageU8, PreprocessVariant};
use leakspot_tensor::Tensor;

use crate::error::{OilnetError, Result};

/// Default margin around a detected box, as a fraction of the box size per
/// side.
pub const DEFAULT_CROP_MARGIN: f64 = 0.05;

/// A classifier-ready image (already cropped, preprocessed and resized).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub image: ImageU8,
    pub label: ClassLabel,
}

/// How raw images become network inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputPipeline {
    pub variant: PreprocessVariant,
    pub clahe: ClaheConfig,
    pub input_size: usize,
    pub crop_margin: f64,
}

impl InputPipeline {
    pub fn new(variant: PreprocessVariant, input_size: usize) -> Self {
        Self { variant, clahe: ClaheConfig::default(), input_size, crop_margin: DEFAULT_CROP_MARGIN }
    }

    /// Crop → preprocess → resize.
    pub fn prepare(&self, img: &ImageU8, bbox: &BoundingBox) -> Result<ImageU8> {
        let cropped = crop(img, bbox, self.crop_margin)?;
        let pre = preprocess(&cropped, self.variant, &self.clahe)?;
        Ok(resize_bilinear(&pre, self.input_size, self.input_size)?)
    }

    /// Prepares labelled samples using their first box, or the whole image
    /// when a sample has none.
    pub fn prepare_samples(&self, samples: &[&Sample]) -> Result<Vec<LabeledImage>> {
        let whole = BoundingBox { class_id: 0, cx: 0.5, cy: 0.5, w: 1.0, h: 1.0 };
        samples
            .iter()
            .map(|s| Ok(LabeledImage { image: self.prepare(&s.image, s.boxes.first().unwrap_or(&whole))?, label: s.label }))
            .collect()
    }
}

/// Stacks images into an `[N, C, H, W]` tensor scaled to `[0, 1]`.
pub fn images_to_batch<'a, I>(images: I) -> Result<Tensor>
where
    I: IntoIterator<Item = &'a ImageU8>,
{
    let planes = images.into_iter().map(normalize).collect::<std::result::Result<Vec<_>, _>>()?;
    if planes.is_empty() {
        return Err(OilnetError::Config("empty batch".into()));
    }
    Ok(Tensor::stack(&planes)?)
}
