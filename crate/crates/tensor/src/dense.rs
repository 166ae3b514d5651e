use crate::error::{Result, TensorError};
use crate::gemm::sgemm;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub input: Tensor,
    pub weights: Tensor,
    pub bias: Tensor,
}

fn check(x: &Tensor, weights: &Tensor, bias_len: usize) -> Result<(usize, usize, usize)> {
    let (n, f) = x.dims2()?;
    let (wf, u) = weights.dims2()?;
    if wf != f {
        return Err(TensorError::Shape(format!(
            "dense: input has {f} features but weights expect {wf}"
        )));
    }
    if bias_len != u {
        return Err(TensorError::Shape(format!("dense: bias has {bias_len} entries for {u} units")));
    }
    Ok((n, f, u))
}

/// `x · W + b` for `x` of shape N×F and `W` of shape F×U.
pub fn dense_forward(x: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (n, f, u) = check(x, weights, bias.len())?;
    let mut out = vec![0.0f32; n * u];
    sgemm(n, f, u, x.data(), false, weights.data(), false, 0.0, &mut out);
    for row in out.chunks_exact_mut(u) {
        row.iter_mut().zip(bias.data()).for_each(|(o, &b)| *o += b);
    }
    Tensor::new(vec![n, u], out)
}

pub fn dense_backward(x: &Tensor, weights: &Tensor, upstream: &Tensor) -> Result<DenseGrads> {
    let (n, f, u) = check(x, weights, weights.shape()[1])?;
    if upstream.shape() != [n, u] {
        return Err(TensorError::Shape(format!(
            "dense backward: upstream {:?} vs output [{n}, {u}]",
            upstream.shape()
        )));
    }
    let mut dx = vec![0.0f32; n * f];
    sgemm(n, u, f, upstream.data(), false, weights.data(), true, 0.0, &mut dx);
    let mut dw = vec![0.0f32; f * u];
    sgemm(f, n, u, x.data(), true, upstream.data(), false, 0.0, &mut dw);
    let mut db = vec![0.0f32; u];
    for row in upstream.data().chunks_exact(u) {
        db.iter_mut().zip(row).for_each(|(d, &g)| *d += g);
    }
    Ok(DenseGrads {
        input: Tensor::new(vec![n, f], dx)?,
        weights: Tensor::new(vec![f, u], dw)?,
        bias: Tensor::new(vec![u], db)?,
    })
}
