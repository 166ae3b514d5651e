//! Stride-1 2-D cross-correlation via im2col and a packed GEMM.

use crate::error::{Result, TensorError};
use crate::gemm::sgemm;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Zero padding of `(k - 1) / 2` per side; output keeps the input extent.
    Same,
    /// No padding; output shrinks by `k - 1`.
    Valid,
}

/// Everything the backward pass needs from the forward call.
#[derive(Debug, Clone, Copy)]
pub struct Conv2dCtx<'a> {
    pub input: &'a Tensor,
    pub weights: &'a Tensor,
    pub padding: Padding,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conv2dGrads {
    pub input: Tensor,
    pub weights: Tensor,
    pub bias: Tensor,
}

#[derive(Debug, Clone, Copy)]
struct Geometry {
    n: usize,
    cin: usize,
    h: usize,
    w: usize,
    cout: usize,
    kh: usize,
    kw: usize,
    pad_h: usize,
    pad_w: usize,
    oh: usize,
    ow: usize,
}

impl Geometry {
    fn new(input: &Tensor, weights: &Tensor, padding: Padding) -> Result<Self> {
        let (n, cin, h, w) = input.dims4()?;
        let (cout, wcin, kh, kw) = weights.dims4()?;
        if wcin != cin {
            return Err(TensorError::Shape(format!(
                "conv2d: input has {cin} channels but weights expect {wcin}"
            )));
        }
        let (pad_h, pad_w) = match padding {
            Padding::Valid => (0, 0),
            Padding::Same => {
                if kh % 2 == 0 || kw % 2 == 0 {
                    return Err(TensorError::Shape(format!(
                        "conv2d: same padding needs an odd kernel, got {kh}x{kw}"
                    )));
                }
                ((kh - 1) / 2, (kw - 1) / 2)
            }
        };
        if h + 2 * pad_h < kh || w + 2 * pad_w < kw {
            return Err(TensorError::Shape(format!(
                "conv2d: {kh}x{kw} kernel does not fit padded {h}x{w} input"
            )));
        }
        Ok(Self {
            n,
            cin,
            h,
            w,
            cout,
            kh,
            kw,
            pad_h,
            pad_w,
            oh: h + 2 * pad_h - kh + 1,
            ow: w + 2 * pad_w - kw + 1,
        })
    }

    fn patch_len(&self) -> usize {
        self.cin * self.kh * self.kw
    }

    fn out_pixels(&self) -> usize {
        self.oh * self.ow
    }

    /// Unfold one sample into a `(cin*kh*kw) × (oh*ow)` matrix.
    fn im2col(&self, sample: &[f32], cols: &mut [f32]) {
        let p = self.out_pixels();
        for ci in 0..self.cin {
            let plane = &sample[ci * self.h * self.w..(ci + 1) * self.h * self.w];
            for ky in 0..self.kh {
                for kx in 0..self.kw {
                    let row = (ci * self.kh + ky) * self.kw + kx;
                    let dst = &mut cols[row * p..(row + 1) * p];
                    for oy in 0..self.oh {
                        let iy = (oy + ky) as isize - self.pad_h as isize;
                        let line = &mut dst[oy * self.ow..(oy + 1) * self.ow];
                        if iy < 0 || iy >= self.h as isize {
                            line.fill(0.0);
                            continue;
                        }
                        let src = &plane[iy as usize * self.w..(iy as usize + 1) * self.w];
                        for (ox, out) in line.iter_mut().enumerate() {
                            let ix = (ox + kx) as isize - self.pad_w as isize;
                            *out = if ix < 0 || ix >= self.w as isize {
                                0.0
                            } else {
                                src[ix as usize]
                            };
                        }
                    }
                }
            }
        }
    }

    /// Scatter-add a column matrix back onto one sample's input gradient.
    fn col2im(&self, cols: &[f32], sample_grad: &mut [f32]) {
        let p = self.out_pixels();
        for ci in 0..self.cin {
            let plane = &mut sample_grad[ci * self.h * self.w..(ci + 1) * self.h * self.w];
            for ky in 0..self.kh {
                for kx in 0..self.kw {
                    let row = (ci * self.kh + ky) * self.kw + kx;
                    let src = &cols[row * p..(row + 1) * p];
                    for oy in 0..self.oh {
                        let iy = (oy + ky) as isize - self.pad_h as isize;
                        if iy < 0 || iy >= self.h as isize {
                            continue;
                        }
                        let dst = &mut plane[iy as usize * self.w..(iy as usize + 1) * self.w];
                        for ox in 0..self.ow {
                            let ix = (ox + kx) as isize - self.pad_w as isize;
                            if ix >= 0 && ix < self.w as isize {
                                dst[ix as usize] += src[oy * self.ow + ox];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Cross-correlate `input` (N×Cin×H×W) with `weights` (Cout×Cin×Kh×Kw) and add
/// `bias` (Cout). The kernel is not flipped.
pub fn conv2d_forward(
    input: &Tensor,
    weights: &Tensor,
    bias: &Tensor,
    padding: Padding,
) -> Result<Tensor> {
    let g = Geometry::new(input, weights, padding)?;
    if bias.len() != g.cout {
        return Err(TensorError::Shape(format!(
            "conv2d: bias has {} entries for {} filters",
            bias.len(),
            g.cout
        )));
    }
    let k = g.patch_len();
    let p = g.out_pixels();
    let in_per = g.cin * g.h * g.w;
    let out_per = g.cout * p;
    let mut out = vec![0.0f32; g.n * out_per];
    let mut cols = vec![0.0f32; k * p];
    for s in 0..g.n {
        g.im2col(&input.data()[s * in_per..(s + 1) * in_per], &mut cols);
        let dst = &mut out[s * out_per..(s + 1) * out_per];
        sgemm(g.cout, k, p, weights.data(), false, &cols, false, 0.0, dst);
        for (oc, &b) in bias.data().iter().enumerate() {
            dst[oc * p..(oc + 1) * p].iter_mut().for_each(|v| *v += b);
        }
    }
    Tensor::new(vec![g.n, g.cout, g.oh, g.ow], out)
}

/// Gradients of the forward map with respect to input, weights and bias.
pub fn conv2d_backward(ctx: &Conv2dCtx<'_>, upstream: &Tensor) -> Result<Conv2dGrads> {
    let g = Geometry::new(ctx.input, ctx.weights, ctx.padding)?;
    let expected = [g.n, g.cout, g.oh, g.ow];
    if upstream.shape() != expected {
        return Err(TensorError::Shape(format!(
            "conv2d backward: upstream {:?} does not match output {:?}",
            upstream.shape(),
            expected
        )));
    }
    let k = g.patch_len();
    let p = g.out_pixels();
    let in_per = g.cin * g.h * g.w;
    let out_per = g.cout * p;

    let mut d_input = vec![0.0f32; ctx.input.len()];
    let mut d_weights = vec![0.0f32; ctx.weights.len()];
    let mut d_bias = vec![0.0f32; g.cout];
    let mut cols = vec![0.0f32; k * p];
    let mut d_cols = vec![0.0f32; k * p];

    for s in 0..g.n {
        let dy = &upstream.data()[s * out_per..(s + 1) * out_per];
        g.im2col(&ctx.input.data()[s * in_per..(s + 1) * in_per], &mut cols);
        // dW += dY · colsᵀ
        sgemm(g.cout, p, k, dy, false, &cols, true, 1.0, &mut d_weights);
        // dcols = Wᵀ · dY
        sgemm(k, g.cout, p, ctx.weights.data(), true, dy, false, 0.0, &mut d_cols);
        g.col2im(&d_cols, &mut d_input[s * in_per..(s + 1) * in_per]);
        for (oc, db) in d_bias.iter_mut().enumerate() {
            *db += dy[oc * p..(oc + 1) * p].iter().sum::<f32>();
        }
    }

    Ok(Conv2dGrads {
        input: Tensor::new(ctx.input.shape().to_vec(), d_input)?,
        weights: Tensor::new(ctx.weights.shape().to_vec(), d_weights)?,
        bias: Tensor::new(vec![g.cout], d_bias)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::naive_conv2d as naive_conv;

    fn t(shape: &[usize], data: &[f32]) -> Tensor {
        Tensor::from_slice(shape, data).unwrap()
    }

    #[test]
    fn two_by_two_valid_example() {
        let x = t(&[1, 1, 3, 3], &[1., 2., 3., 4., 5., 6., 7., 8., 9.]);
        let w = t(&[1, 1, 2, 2], &[1., 0., 0., 1.]);
        let b = t(&[1], &[0.0]);
        let y = conv2d_forward(&x, &w, &b, Padding::Valid).unwrap();
        assert_eq!(y.shape(), &[1, 1, 2, 2]);
        assert_eq!(y.data(), &[6., 8., 12., 14.]);
        assert_eq!(y, naive_conv(&x, &w, &b, 0));
    }

    #[test]
    fn zero_kernel_yields_bias() {
        let x = Tensor::full(&[2, 3, 5, 4], 0.7);
        let w = Tensor::zeros(&[2, 3, 3, 3]);
        let b = t(&[2], &[1.5, -0.25]);
        let y = conv2d_forward(&x, &w, &b, Padding::Same).unwrap();
        for s in 0..2 {
            for (oc, &bv) in [1.5f32, -0.25].iter().enumerate() {
                let start = (s * 2 + oc) * 20;
                assert!(y.data()[start..start + 20].iter().all(|&v| v == bv));
            }
        }
    }

    #[test]
    fn delta_kernel_same_padding_is_identity() {
        let x = t(&[1, 1, 4, 5], &(0..20).map(|i| i as f32 * 0.3 - 2.0).collect::<Vec<_>>());
        let mut w = Tensor::zeros(&[1, 1, 3, 3]);
        w.data_mut()[4] = 1.0;
        let y = conv2d_forward(&x, &w, &t(&[1], &[0.0]), Padding::Same).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn matches_naive_loop_on_multichannel_input() {
        let x = t(&[2, 3, 6, 5], &(0..180).map(|i| ((i * 37) % 23) as f32 / 11.0 - 1.0).collect::<Vec<_>>());
        let w = t(&[4, 3, 3, 3], &(0..108).map(|i| ((i * 53) % 17) as f32 / 8.0 - 1.0).collect::<Vec<_>>());
        let b = t(&[4], &[0.1, -0.2, 0.3, 0.0]);
        for (pad, mode) in [(1, Padding::Same), (0, Padding::Valid)] {
            let fast = conv2d_forward(&x, &w, &b, mode).unwrap();
            let slow = naive_conv(&x, &w, &b, pad);
            assert_eq!(fast.shape(), slow.shape());
            for (a, b) in fast.data().iter().zip(slow.data()) {
                assert!((a - b).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn same_preserves_and_valid_shrinks_extent() {
        let x = Tensor::full(&[1, 2, 7, 9], 1.0);
        let w = Tensor::full(&[3, 2, 3, 3], 0.1);
        let b = Tensor::zeros(&[3]);
        assert_eq!(conv2d_forward(&x, &w, &b, Padding::Same).unwrap().shape(), &[1, 3, 7, 9]);
        assert_eq!(conv2d_forward(&x, &w, &b, Padding::Valid).unwrap().shape(), &[1, 3, 5, 7]);
    }

    #[test]
    fn channel_mismatch_is_a_shape_error() {
        let x = Tensor::zeros(&[1, 2, 4, 4]);
        let w = Tensor::zeros(&[1, 3, 3, 3]);
        let err = conv2d_forward(&x, &w, &Tensor::zeros(&[1]), Padding::Same).unwrap_err();
        assert!(matches!(err, TensorError::Shape(_)));
        let small = Tensor::zeros(&[1, 3, 2, 2]);
        assert!(conv2d_forward(&small, &w, &Tensor::zeros(&[1]), Padding::Valid).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let x = Tensor::full(&[1, 2, 4, 4], 0.5);
        let w = Tensor::full(&[3, 2, 3, 3], 0.2);
        let ctx = Conv2dCtx { input: &x, weights: &w, padding: Padding::Same };
        let g = conv2d_backward(&ctx, &Tensor::zeros(&[1, 3, 4, 4])).unwrap();
        assert!(g.input.data().iter().all(|&v| v == 0.0));
        assert!(g.weights.data().iter().all(|&v| v == 0.0));
        assert!(g.bias.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_chain_rule() {
        let x = t(&[1, 1, 1, 1], &[2.5]);
        let w = t(&[1, 1, 1, 1], &[-1.5]);
        let ctx = Conv2dCtx { input: &x, weights: &w, padding: Padding::Valid };
        let g = conv2d_backward(&ctx, &t(&[1, 1, 1, 1], &[1.0])).unwrap();
        assert_eq!(g.weights.data(), &[2.5]);
        assert_eq!(g.input.data(), &[-1.5]);
        assert_eq!(g.bias.data(), &[1.0]);
    }

    #[test]
    fn upstream_shape_is_checked() {
        let x = Tensor::zeros(&[1, 1, 4, 4]);
        let w = Tensor::zeros(&[1, 1, 3, 3]);
        let ctx = Conv2dCtx { input: &x, weights: &w, padding: Padding::Valid };
        assert!(conv2d_backward(&ctx, &Tensor::zeros(&[1, 1, 4, 4])).is_err());
    }
}
