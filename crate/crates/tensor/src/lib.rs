//! Minimal dense-tensor engine for small convolutional classifiers.
//!
//! Every layer is a pair of free functions: a forward pass and a backward pass
//! that consumes whatever the forward pass needed to keep. There is no graph
//! and no tape; callers (the model crate) wire the passes together.
//!
//! All arithmetic is single precision with a fixed summation order, so every
//! result is bit-reproducible on a given platform.

mod activation;
mod batchnorm;
mod conv;
mod dense;
mod dropout;
mod error;
mod gemm;
mod loss;
mod optim;
mod pool;
mod tensor;

#[cfg(any(test, feature = "reference"))]
pub mod reference;

pub use activation::{relu, relu_backward, sigmoid, sigmoid_backward, sigmoid_scalar};
pub use batchnorm::{batchnorm_backward, batchnorm_forward, BatchNormCache, BatchNormGrads};
pub use conv::{conv2d_backward, conv2d_forward, Conv2dCtx, Conv2dGrads, Padding};
pub use dense::{dense_backward, dense_forward, DenseGrads};
pub use dropout::{dropout, dropout_backward, Dropout};
pub use error::{Result, TensorError};
pub use loss::{bce_loss, bce_with_logits, PROB_CLAMP};
pub use optim::{nadam_step, NadamConfig, Parameter};
pub use pool::{maxpool2d, maxpool2d_backward, MaxPool};
pub use tensor::Tensor;

/// Train or inference behaviour for layers that differ between the two.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}
