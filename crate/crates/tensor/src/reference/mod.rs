//! Independent oracles used by tests and the acceptance suite.
//!
//! Nothing here shares code with the optimized kernels; the routines are
//! deliberately direct translations of the definitions.

pub mod gradcheck;

use crate::Tensor;

/// Direct loop over output position and kernel tap with zero padding `pad`.
pub fn naive_conv2d(input: &Tensor, weights: &Tensor, bias: &Tensor, pad: usize) -> Tensor {
    let (n, cin, h, w) = input.dims4().expect("4-D input");
    let (cout, _, kh, kw) = weights.dims4().expect("4-D weights");
    let oh = h + 2 * pad - kh + 1;
    let ow = w + 2 * pad - kw + 1;
    let mut out = Tensor::zeros(&[n, cout, oh, ow]);
    for s in 0..n {
        for oc in 0..cout {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = bias.data()[oc];
                    for ci in 0..cin {
                        for ky in 0..kh {
                            for kx in 0..kw {
                                let iy = oy as isize + ky as isize - pad as isize;
                                let ix = ox as isize + kx as isize - pad as isize;
                                if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                    continue;
                                }
                                let xi = ((s * cin + ci) * h + iy as usize) * w + ix as usize;
                                let wi = ((oc * cin + ci) * kh + ky) * kw + kx;
                                acc += input.data()[xi] * weights.data()[wi];
                            }
                        }
                    }
                    out.data_mut()[((s * cout + oc) * oh + oy) * ow + ox] = acc;
                }
            }
        }
    }
    out
}
