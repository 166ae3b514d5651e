use crate::error::{Result, TensorError};
use crate::tensor::Tensor;

pub fn relu(x: &Tensor) -> Tensor {
    x.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// Passes `upstream` where the forward input was strictly positive.
pub fn relu_backward(x: &Tensor, upstream: &Tensor) -> Result<Tensor> {
    if !x.same_shape(upstream) {
        return Err(TensorError::Shape(format!(
            "relu backward: input {:?} vs upstream {:?}",
            x.shape(),
            upstream.shape()
        )));
    }
    let data = x
        .data()
        .iter()
        .zip(upstream.data())
        .map(|(&v, &u)| if v > 0.0 { u } else { 0.0 })
        .collect();
    Tensor::new(x.shape().to_vec(), data)
}

/// Logistic function evaluated without overflow for large |x|.
pub fn sigmoid_scalar(x: f32) -> f32 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(x: &Tensor) -> Tensor {
    x.map(sigmoid_scalar)
}

/// Backward pass given the forward *output* `y`.
pub fn sigmoid_backward(y: &Tensor, upstream: &Tensor) -> Result<Tensor> {
    if !y.same_shape(upstream) {
        return Err(TensorError::Shape(format!(
            "sigmoid backward: output {:?} vs upstream {:?}",
            y.shape(),
            upstream.shape()
        )));
    }
    let data = y
        .data()
        .iter()
        .zip(upstream.data())
        .map(|(&p, &u)| u * p * (1.0 - p))
        .collect();
    Tensor::new(y.shape().to_vec(), data)
}
