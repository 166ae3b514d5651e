use rand::Rng;

use crate::error::{Result, TensorError};
use crate::tensor::Tensor;
use crate::Mode;

#[derive(Debug, Clone, PartialEq)]
pub struct Dropout {
    pub output: Tensor,
    /// Per-element multiplier: `0` for dropped, `1 / (1 - rate)` for kept.
    /// Empty when the layer acted as the identity.
    pub mask: Vec<f32>,
}

/// Inverted dropout. Inference mode and `rate == 0` return the input unchanged.
pub fn dropout<R: Rng + ?Sized>(x: &Tensor, rate: f32, mode: Mode, rng: &mut R) -> Result<Dropout> {
    if !(0.0..1.0).contains(&rate) {
        return Err(TensorError::InvalidArgument(format!(
            "dropout rate must lie in [0, 1), got {rate}"
        )));
    }
    if mode == Mode::Infer || rate == 0.0 {
        return Ok(Dropout {
            output: x.clone(),
            mask: Vec::new(),
        });
    }
    let keep = 1.0 / (1.0 - rate);
    let mask: Vec<f32> = (0..x.len())
        .map(|_| if rng.gen::<f32>() < rate { 0.0 } else { keep })
        .collect();
    let data = x.data().iter().zip(&mask).map(|(&v, &m)| v * m).collect();
    Ok(Dropout {
        output: Tensor::new(x.shape().to_vec(), data)?,
        mask,
    })
}

pub fn dropout_backward(mask: &[f32], upstream: &Tensor) -> Result<Tensor> {
    if mask.is_empty() {
        return Ok(upstream.clone());
    }
    if mask.len() != upstream.len() {
        return Err(TensorError::Shape(format!(
            "dropout backward: mask of {} for upstream of {}",
            mask.len(),
            upstream.len()
        )));
    }
    let data = upstream.data().iter().zip(mask).map(|(&g, &m)| g * m).collect();
    Tensor::new(upstream.shape().to_vec(), data)
}
