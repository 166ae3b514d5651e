use leakspot_imageproc::ImageU8;
use leakspot_tensor::Tensor;

use crate::error::{OilnetError, Result};
use crate::model::Oilnet40;

/// Maps each channel to `[0, 255]` by its own minimum and maximum; constant
/// channels become all zero.
pub fn scale_channels(maps: &Tensor) -> Result<Vec<ImageU8>> {
    let (_, c, h, w) = maps.dims4()?;
    let plane = h * w;
    (0..c)
        .map(|ch| {
            let values = &maps.data()[ch * plane..(ch + 1) * plane];
            let lo = values.iter().copied().fold(f32::INFINITY, f32::min);
            let hi = values.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            let range = hi - lo;
            let data = if range > 0.0 && range.is_finite() {
                values.iter().map(|&v| ((v - lo) / range * 255.0).round().clamp(0.0, 255.0) as u8).collect()
            } else {
                vec![0u8; plane]
            };
            Ok(ImageU8::new(h, w, 1, data)?)
        })
        .collect()
}

/// Feature maps of convolution block `conv_index` (1 to 3) for a single
/// input, one grayscale image per filter. Maps are taken at the block
/// output: after batch norm, ReLU and pooling.
pub fn dump_activations(model: &Oilnet40, input: &Tensor, conv_index: usize) -> Result<Vec<ImageU8>> {
    if !(1..=3).contains(&conv_index) {
        return Err(OilnetError::Config(format!("conv index must be 1, 2 or 3, got {conv_index}")));
    }
    if input.shape().first() != Some(&1) {
        return Err(OilnetError::Config(format!("activations need a single input, got shape {:?}", input.shape())));
    }
    scale_channels(&model.block_output(input, conv_index - 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_spans_full_range_and_zeroes_constants() {
        let t = Tensor::new(vec![1, 2, 1, 3], vec![1.0, 2.0, 3.0, 5.0, 5.0, 5.0]).unwrap();
        let maps = scale_channels(&t).unwrap();
        assert_eq!(maps[0].data(), &[0, 128, 255]);
        assert_eq!(maps[1].data(), &[0, 0, 0]);
    }
}
