//! Central finite-difference checks for every layer's backward pass.
//!
//! Each check builds the scalar objective `L = Σ r ⊙ y` for a random `r`,
//! compares the analytic gradient obtained with upstream `r` against
//! `(L(θ + h) − L(θ − h)) / 2h` for every input and parameter element, and
//! reports the worst `|a − n| / max(1, |a|, |n|)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::*;

pub const PERTURBATION: f32 = 1e-2;
pub const TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct GradReport {
    pub layer: &'static str,
    pub cases: usize,
    pub elements: usize,
    pub max_error: f64,
}

impl GradReport {
    pub fn passed(&self) -> bool {
        self.max_error <= TOLERANCE
    }
}

pub fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize], scale: f32) -> Tensor {
    let len = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..len).map(|_| rng.gen_range(-scale..scale)).collect()).unwrap()
}

pub fn objective(y: &Tensor, r: &Tensor) -> f64 {
    y.data().iter().zip(r.data()).map(|(&a, &b)| a as f64 * b as f64).sum()
}

pub fn scaled_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / 1f64.max(analytic.abs()).max(numeric.abs())
}

/// Worst scaled error between `analytic` and central differences of `f` at `base`.
pub fn max_fd_error(base: &Tensor, analytic: &Tensor, mut f: impl FnMut(&Tensor) -> f64) -> f64 {
    assert_eq!(base.shape(), analytic.shape(), "gradient shape");
    let h = PERTURBATION;
    let mut probe = base.clone();
    let mut worst = 0.0f64;
    for i in 0..base.len() {
        let orig = base.data()[i];
        probe.data_mut()[i] = orig + h;
        let up = f(&probe);
        probe.data_mut()[i] = orig - h;
        let down = f(&probe);
        probe.data_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * h as f64);
        worst = worst.max(scaled_error(analytic.data()[i] as f64, numeric));
    }
    worst
}

struct Acc {
    report: GradReport,
}

impl Acc {
    fn new(layer: &'static str) -> Self {
        Self {
            report: GradReport {
                layer,
                cases: 0,
                elements: 0,
                max_error: 0.0,
            },
        }
    }

    fn add(&mut self, elements: usize, err: f64) {
        self.report.elements += elements;
        self.report.max_error = self.report.max_error.max(err);
    }

    fn case(&mut self) {
        self.report.cases += 1;
    }
}

fn random_nchw(rng: &mut ChaCha8Rng) -> [usize; 4] {
    [rng.gen_range(1..=2), rng.gen_range(1..=4), rng.gen_range(3..=8), rng.gen_range(3..=8)]
}

pub fn conv2d(seed: u64, cases: usize) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = Acc::new("conv2d");
    for case in 0..cases {
        let [n, cin, h, w] = random_nchw(&mut rng);
        let cout = rng.gen_range(1..=4);
        let (padding, k) = if case % 2 == 0 {
            (Padding::Same, 3)
        } else {
            (Padding::Valid, rng.gen_range(1..=3))
        };
        let x = random_tensor(&mut rng, &[n, cin, h, w], 1.0);
        let wt = random_tensor(&mut rng, &[cout, cin, k, k], 0.5);
        let b = random_tensor(&mut rng, &[cout], 0.5);
        let y = conv2d_forward(&x, &wt, &b, padding).unwrap();
        let r = random_tensor(&mut rng, y.shape(), 1.0);
        let g = conv2d_backward(&Conv2dCtx { input: &x, weights: &wt, padding }, &r).unwrap();
        acc.add(x.len(), max_fd_error(&x, &g.input, |p| objective(&conv2d_forward(p, &wt, &b, padding).unwrap(), &r)));
        acc.add(wt.len(), max_fd_error(&wt, &g.weights, |p| objective(&conv2d_forward(&x, p, &b, padding).unwrap(), &r)));
        acc.add(b.len(), max_fd_error(&b, &g.bias, |p| objective(&conv2d_forward(&x, &wt, p, padding).unwrap(), &r)));
        acc.case();
    }
    acc.report
}

pub fn relu_layer(seed: u64, cases: usize) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = Acc::new("relu");
    for _ in 0..cases {
        let shape = random_nchw(&mut rng);
        let len: usize = shape.iter().product();
        // Every element sits at least 5h from zero so no stencil straddles the kink.
        let data = (0..len)
            .map(|_| {
                let mag = rng.gen_range(0.05f32..1.0);
                if rng.gen_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            })
            .collect();
        let x = Tensor::new(shape.to_vec(), data).unwrap();
        let r = random_tensor(&mut rng, &shape, 1.0);
        let g = relu_backward(&x, &r).unwrap();
        acc.add(x.len(), max_fd_error(&x, &g, |p| objective(&relu(p), &r)));
        acc.case();
    }
    acc.report
}

pub fn maxpool(seed: u64, cases: usize) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = Acc::new("maxpool2d");
    for _ in 0..cases {
        let shape = [
            rng.gen_range(1..=2),
            rng.gen_range(1..=4),
            2 * rng.gen_range(1..=4),
            2 * rng.gen_range(1..=4),
        ];
        let len: usize = shape.iter().product();
        // Distinct values 0.05 apart: a ±h probe never changes a window winner.
        let mut levels: Vec<f32> = (0..len).map(|i| i as f32 * 0.05).collect();
        for i in (1..len).rev() {
            levels.swap(i, rng.gen_range(0..=i));
        }
        let x = Tensor::new(shape.to_vec(), levels).unwrap();
        let pooled = maxpool2d(&x).unwrap();
        let r = random_tensor(&mut rng, pooled.output.shape(), 1.0);
        let g = maxpool2d_backward(x.shape(), &pooled.argmax, &r).unwrap();
        acc.add(x.len(), max_fd_error(&x, &g, |p| objective(&maxpool2d(p).unwrap().output, &r)));
        acc.case();
    }
    acc.report
}

fn bn_case(acc: &mut Acc, rng: &mut ChaCha8Rng, shape: &[usize], mode: Mode) {
    let c = shape[1];
    let x = random_tensor(rng, shape, 2.0);
    let gamma = random_tensor(rng, &[c], 1.5);
    let beta = random_tensor(rng, &[c], 1.0);
    let rm0 = random_tensor(rng, &[c], 0.5);
    let rv0 = Tensor::new(vec![c], (0..c).map(|_| rng.gen_range(0.5f32..2.0)).collect()).unwrap();
    let run = |x: &Tensor, gamma: &Tensor, beta: &Tensor| {
        let (mut rm, mut rv) = (rm0.clone(), rv0.clone());
        batchnorm_forward(x, gamma, beta, &mut rm, &mut rv, mode, 0.99, 1e-5).unwrap()
    };
    let (y, cache) = run(&x, &gamma, &beta);
    let r = random_tensor(rng, y.shape(), 1.0);
    let g = batchnorm_backward(&cache, &r).unwrap();
    acc.add(x.len(), max_fd_error(&x, &g.input, |p| objective(&run(p, &gamma, &beta).0, &r)));
    acc.add(c, max_fd_error(&gamma, &g.gamma, |p| objective(&run(&x, p, &beta).0, &r)));
    acc.add(c, max_fd_error(&beta, &g.beta, |p| objective(&run(&x, &gamma, p).0, &r)));
    acc.case();
}

/// Alternates 4-D and 2-D inputs. Every channel sees at least four values;
/// with two the normalized output is ±1 and the map is too flat for a 1e-2 stencil.
pub fn batchnorm_train(seed: u64, cases: usize) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = Acc::new("batchnorm (train)");
    for case in 0..cases {
        if case % 2 == 0 {
            let s = random_nchw(&mut rng);
            bn_case(&mut acc, &mut rng, &s, Mode::Train);
        } else {
            let s = [rng.gen_range(4..=8), rng.gen_range(1..=6)];
            bn_case(&mut acc, &mut rng, &s, Mode::Train);
        }
    }
    acc.report
}

pub fn batchnorm_infer(seed: u64, cases: usize) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = Acc::new("batchnorm (infer)");
    for _ in 0..cases {
        let s = random_nchw(&mut rng);
        bn_case(&mut acc, &mut rng, &s, Mode::Infer);
    }
    acc.report
}

pub fn dense(seed: u64, cases: usize) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = Acc::new("dense");
    for _ in 0..cases {
        let (n, f, u) = (rng.gen_range(1..=4), rng.gen_range(1..=32), rng.gen_range(1..=8));
        let x = random_tensor(&mut rng, &[n, f], 1.0);
        let w = random_tensor(&mut rng, &[f, u], 0.5);
        let b = random_tensor(&mut rng, &[u], 0.5);
        let r = random_tensor(&mut rng, &[n, u], 1.0);
        let g = dense_backward(&x, &w, &r).unwrap();
        acc.add(x.len(), max_fd_error(&x, &g.input, |p| objective(&dense_forward(p, &w, &b).unwrap(), &r)));
        acc.add(w.len(), max_fd_error(&w, &g.weights, |p| objective(&dense_forward(&x, p, &b).unwrap(), &r)));
        acc.add(b.len(), max_fd_error(&b, &g.bias, |p| objective(&dense_forward(&x, &w, p).unwrap(), &r)));
        acc.case();
    }
    acc.report
}

/// The mask is re-drawn from the same seed on every probe, so the map is linear.
pub fn dropout_layer(seed: u64, cases: usize) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = Acc::new("dropout");
    for case in 0..cases {
        let shape = random_nchw(&mut rng);
        let x = random_tensor(&mut rng, &shape, 1.0);
        let mask_seed = seed.wrapping_mul(31).wrapping_add(case as u64);
        let fwd = |p: &Tensor| dropout(p, 0.25, Mode::Train, &mut ChaCha8Rng::seed_from_u64(mask_seed)).unwrap();
        let d = fwd(&x);
        let r = random_tensor(&mut rng, &shape, 1.0);
        let g = dropout_backward(&d.mask, &r).unwrap();
        acc.add(x.len(), max_fd_error(&x, &g, |p| objective(&fwd(p).output, &r)));
        acc.case();
    }
    acc.report
}

pub fn sigmoid_layer(seed: u64, cases: usize) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = Acc::new("sigmoid");
    for _ in 0..cases {
        let len = rng.gen_range(1..=16);
        let x = random_tensor(&mut rng, &[len], 4.0);
        let y = sigmoid(&x);
        let r = random_tensor(&mut rng, &[len], 1.0);
        let g = sigmoid_backward(&y, &r).unwrap();
        acc.add(len, max_fd_error(&x, &g, |p| objective(&sigmoid(p), &r)));
        acc.case();
    }
    acc.report
}

pub fn bce(seed: u64, cases: usize) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = Acc::new("bce (fused logit)");
    for _ in 0..cases {
        let label = if rng.gen_bool(0.5) { 1.0 } else { 0.0 };
        let z = Tensor::scalar(rng.gen_range(-5.0..5.0));
        let (_, dz) = bce_with_logits(z.data()[0], label).unwrap();
        acc.add(1, max_fd_error(&z, &Tensor::scalar(dz), |p| bce_with_logits(p.data()[0], label).unwrap().0 as f64));
        acc.case();
    }
    acc.report
}

/// Every per-layer check with `cases` random shapes each.
pub fn all_layers(seed: u64, cases: usize) -> Vec<GradReport> {
    vec![
        conv2d(seed, cases),
        relu_layer(seed + 1, cases),
        maxpool(seed + 2, cases),
        batchnorm_train(seed + 3, cases),
        batchnorm_infer(seed + 4, cases),
        dense(seed + 5, cases),
        dropout_layer(seed + 6, cases),
        sigmoid_layer(seed + 7, cases),
        bce(seed + 8, cases),
    ]
}
