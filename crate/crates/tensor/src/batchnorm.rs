use crate::error::{Result, TensorError};
use crate::tensor::Tensor;
use crate::Mode;

/// Saved forward state for [`batchnorm_backward`].
#[derive(Debug, Clone)]
pub struct BatchNormCache {
    shape: Vec<usize>,
    mode: Mode,
    x_hat: Vec<f32>,
    inv_std: Vec<f32>,
    gamma: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormGrads {
    pub input: Tensor,
    pub gamma: Tensor,
    pub beta: Tensor,
}

/// `(batch, channels, spatial)` for a `[N, C]` or `[N, C, H, W]` tensor.
fn layout(x: &Tensor) -> Result<(usize, usize, usize)> {
    match x.shape() {
        [n, c] => Ok((*n, *c, 1)),
        [n, c, h, w] => Ok((*n, *c, h * w)),
        other => Err(TensorError::Shape(format!(
            "batchnorm expects [N, C] or [N, C, H, W], got {other:?}"
        ))),
    }
}

/// Per-channel normalization over every axis except axis 1.
///
/// In [`Mode::Train`] the batch mean and (biased) variance normalize the
/// input and the running statistics move toward them:
/// `running = momentum * running + (1 - momentum) * batch`.
/// In [`Mode::Infer`] only the running statistics are read, so each output
/// element depends on its own input element alone.
#[allow(clippy::too_many_arguments)]
pub fn batchnorm_forward(
    x: &Tensor,
    gamma: &Tensor,
    beta: &Tensor,
    running_mean: &mut Tensor,
    running_var: &mut Tensor,
    mode: Mode,
    momentum: f32,
    eps: f32,
) -> Result<(Tensor, BatchNormCache)> {
    let (n, c, s) = layout(x)?;
    for (name, t) in [
        ("gamma", &*gamma),
        ("beta", &*beta),
        ("running mean", &*running_mean),
        ("running variance", &*running_var),
    ] {
        if t.len() != c {
            return Err(TensorError::Shape(format!(
                "batchnorm {name} has {} entries for {c} channels",
                t.len()
            )));
        }
    }
    if eps <= 0.0 {
        return Err(TensorError::InvalidArgument(format!("batchnorm eps must be positive, got {eps}")));
    }

    let xd = x.data();
    let (mean, var): (Vec<f32>, Vec<f32>) = match mode {
        Mode::Infer => (running_mean.data().to_vec(), running_var.data().to_vec()),
        Mode::Train => {
            // Statistics are reduced in f64, sample by sample, in index order.
            let count = (n * s) as f64;
            let mut mean = vec![0.0f32; c];
            let mut var = vec![0.0f32; c];
            for ch in 0..c {
                let mut acc = 0.0f64;
                for b in 0..n {
                    let start = (b * c + ch) * s;
                    acc += xd[start..start + s].iter().map(|&v| v as f64).sum::<f64>();
                }
                let m = acc / count;
                let mut sq = 0.0f64;
                for b in 0..n {
                    let start = (b * c + ch) * s;
                    sq += xd[start..start + s]
                        .iter()
                        .map(|&v| {
                            let d = v as f64 - m;
                            d * d
                        })
                        .sum::<f64>();
                }
                mean[ch] = m as f32;
                var[ch] = (sq / count) as f32;
            }
            for ch in 0..c {
                let rm = &mut running_mean.data_mut()[ch];
                *rm = momentum * *rm + (1.0 - momentum) * mean[ch];
                let rv = &mut running_var.data_mut()[ch];
                *rv = momentum * *rv + (1.0 - momentum) * var[ch];
            }
            (mean, var)
        }
    };

    let inv_std: Vec<f32> = var.iter().map(|&v| 1.0 / (v + eps).sqrt()).collect();
    let mut x_hat = vec![0.0f32; xd.len()];
    let mut out = vec![0.0f32; xd.len()];
    for b in 0..n {
        for ch in 0..c {
            let start = (b * c + ch) * s;
            let (m, is, g, bt) = (mean[ch], inv_std[ch], gamma.data()[ch], beta.data()[ch]);
            for i in start..start + s {
                let h = (xd[i] - m) * is;
                x_hat[i] = h;
                out[i] = g * h + bt;
            }
        }
    }
    let y = Tensor::new(x.shape().to_vec(), out)?;
    y.ensure_finite("batchnorm")?;
    Ok((
        y,
        BatchNormCache {
            shape: x.shape().to_vec(),
            mode,
            x_hat,
            inv_std,
            gamma: gamma.data().to_vec(),
        },
    ))
}

pub fn batchnorm_backward(cache: &BatchNormCache, upstream: &Tensor) -> Result<BatchNormGrads> {
    if upstream.shape() != cache.shape.as_slice() {
        return Err(TensorError::Shape(format!(
            "batchnorm backward: upstream {:?} vs input {:?}",
            upstream.shape(),
            cache.shape
        )));
    }
    let (n, c, s) = layout(upstream)?;
    let dy = upstream.data();
    let count = (n * s) as f32;
    let mut d_gamma = vec![0.0f32; c];
    let mut d_beta = vec![0.0f32; c];
    for ch in 0..c {
        let (mut sg, mut sb) = (0.0f32, 0.0f32);
        for b in 0..n {
            let start = (b * c + ch) * s;
            for i in start..start + s {
                sg += dy[i] * cache.x_hat[i];
                sb += dy[i];
            }
        }
        d_gamma[ch] = sg;
        d_beta[ch] = sb;
    }

    let mut dx = vec![0.0f32; dy.len()];
    for ch in 0..c {
        let g = cache.gamma[ch];
        let is = cache.inv_std[ch];
        match cache.mode {
            Mode::Infer => {
                for b in 0..n {
                    let start = (b * c + ch) * s;
                    for i in start..start + s {
                        dx[i] = dy[i] * g * is;
                    }
                }
            }
            Mode::Train => {
                // dx = γ·σ⁻¹/M · (M·dy − Σdy − x̂·Σ(dy·x̂))
                let (sum_dy, sum_dy_xhat) = (d_beta[ch], d_gamma[ch]);
                let scale = g * is / count;
                for b in 0..n {
                    let start = (b * c + ch) * s;
                    for i in start..start + s {
                        dx[i] = scale * (count * dy[i] - sum_dy - cache.x_hat[i] * sum_dy_xhat);
                    }
                }
            }
        }
    }
    Ok(BatchNormGrads {
        input: Tensor::new(cache.shape.clone(), dx)?,
        gamma: Tensor::new(vec![c], d_gamma)?,
        beta: Tensor::new(vec![c], d_beta)?,
    })
}
