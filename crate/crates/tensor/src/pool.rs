use crate::error::{Result, TensorError};
use crate::tensor::Tensor;

/// Output of a 2×2 stride-2 max pool.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxPool {
    pub output: Tensor,
    /// Flat input index of the winning element for each output element.
    pub argmax: Vec<usize>,
}

/// 2×2 max pooling with stride 2. Ties go to the first element in row-major
/// order within the window.
pub fn maxpool2d(input: &Tensor) -> Result<MaxPool> {
    let (n, c, h, w) = input.dims4()?;
    if h % 2 != 0 || w % 2 != 0 {
        return Err(TensorError::Shape(format!(
            "maxpool2d needs even height and width, got {h}x{w}"
        )));
    }
    let (oh, ow) = (h / 2, w / 2);
    let x = input.data();
    let mut out = Vec::with_capacity(n * c * oh * ow);
    let mut argmax = Vec::with_capacity(n * c * oh * ow);
    for plane in 0..n * c {
        let base = plane * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let top = base + 2 * oy * w + 2 * ox;
                let mut best = top;
                for idx in [top + 1, top + w, top + w + 1] {
                    if x[idx] > x[best] {
                        best = idx;
                    }
                }
                out.push(x[best]);
                argmax.push(best);
            }
        }
    }
    Ok(MaxPool {
        output: Tensor::new(vec![n, c, oh, ow], out)?,
        argmax,
    })
}

/// Route each upstream value to the input position that won its window.
pub fn maxpool2d_backward(input_shape: &[usize], argmax: &[usize], upstream: &Tensor) -> Result<Tensor> {
    if argmax.len() != upstream.len() {
        return Err(TensorError::Shape(format!(
            "maxpool2d backward: {} argmax entries for {} upstream values",
            argmax.len(),
            upstream.len()
        )));
    }
    let mut grad = Tensor::zeros(input_shape);
    let g = grad.data_mut();
    for (&idx, &u) in argmax.iter().zip(upstream.data()) {
        if idx >= g.len() {
            return Err(TensorError::Shape(format!(
                "maxpool2d backward: argmax {idx} outside input of {} elements",
                g.len()
            )));
        }
        g[idx] += u;
    }
    Ok(grad)
}
