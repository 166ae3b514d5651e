//! Finite-difference check of the whole network's logit.
//!
//! In inference mode the network is piecewise linear in its input and linear
//! in each individual weight, so finite differences are exact inside one
//! activation region. A probe uses the central difference when both ±h passes
//! keep every ReLU sign and pooling choice, the one-sided difference when only
//! one side does, and is skipped (and counted) when neither does.

use leakspot_dataset::rng::sample_rng;
use leakspot_tensor::{Mode, Tensor};
use rand::Rng;

use crate::error::Result;
use crate::model::Oilnet40;

pub const PERTURBATION: f32 = 1e-2;
pub const TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogitCheck {
    pub checked: usize,
    pub skipped: usize,
    pub max_error: f64,
}

impl LogitCheck {
    pub fn passed(&self) -> bool {
        self.checked > 0 && self.max_error <= TOLERANCE
    }
}

fn logit_and_signature(model: &Oilnet40, x: &Tensor) -> Result<(f64, Vec<u64>)> {
    let (logits, cache, _) = model.forward(x, Mode::Infer, &mut sample_rng(0, 0))?;
    Ok((logits.data()[0] as f64, cache.activation_signature()))
}

fn scaled_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / 1f64.max(a.abs()).max(n.abs())
}

/// Gives batch norm non-trivial statistics and affine terms so the check
/// exercises them.
pub fn randomize_norms(model: &mut Oilnet40, seed: u64) {
    let mut rng = sample_rng(seed, 77);
    for n in model.conv_norms.iter_mut().chain(model.hidden_norms.iter_mut()) {
        for v in n.gamma.value.data_mut() {
            *v = rng.gen_range(0.5..1.5);
        }
        for v in n.beta.value.data_mut() {
            *v = rng.gen_range(-0.3..0.3);
        }
        for v in n.running_mean.data_mut() {
            *v = rng.gen_range(-0.2..0.2);
        }
        for v in n.running_var.data_mut() {
            *v = rng.gen_range(0.5..2.0);
        }
    }
}

/// Checks d(logit)/d(input) on every input element and d(logit)/d(θ) on
/// `per_tensor` random coordinates of every trainable tensor. `x` must hold
/// a single sample.
pub fn logit_gradcheck(model: &Oilnet40, x: &Tensor, per_tensor: usize, seed: u64) -> Result<LogitCheck> {
    let mut work = model.clone();
    work.zero_grad();
    let (_, cache, _) = work.forward(x, Mode::Infer, &mut sample_rng(0, 0))?;
    let input_grad = work.backward(&cache, &Tensor::full(&[1, 1], 1.0))?;
    let base_sig = cache.activation_signature();
    drop(cache);
    let h = PERTURBATION;
    let mut report = LogitCheck { checked: 0, skipped: 0, max_error: 0.0 };
    let base_logit = logit_and_signature(model, x)?.0;
    let tally = |analytic: f64, plus: (f64, Vec<u64>), minus: (f64, Vec<u64>), report: &mut LogitCheck| {
        let h = h as f64;
        let numeric = match (plus.1 == base_sig, minus.1 == base_sig) {
            (true, true) => (plus.0 - minus.0) / (2.0 * h),
            (true, false) => (plus.0 - base_logit) / h,
            (false, true) => (base_logit - minus.0) / h,
            (false, false) => {
                report.skipped += 1;
                return;
            }
        };
        report.checked += 1;
        report.max_error = report.max_error.max(scaled_error(analytic, numeric));
    };

    let mut probe = x.clone();
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + h;
        let plus = logit_and_signature(model, &probe)?;
        probe.data_mut()[i] = orig - h;
        let minus = logit_and_signature(model, &probe)?;
        probe.data_mut()[i] = orig;
        tally(input_grad.data()[i] as f64, plus, minus, &mut report);
    }

    let grads: Vec<Tensor> = work.named_parameters().into_iter().map(|(_, p)| p.grad.clone()).collect();
    let mut rng = sample_rng(seed, 0);
    let mut probe_model = model.clone();
    for (t, grad) in grads.iter().enumerate() {
        for _ in 0..per_tensor {
            let i = rng.gen_range(0..grad.len());
            let orig = probe_model.parameters_mut()[t].value.data()[i];
            probe_model.parameters_mut()[t].value.data_mut()[i] = orig + h;
            let plus = logit_and_signature(&probe_model, x)?;
            probe_model.parameters_mut()[t].value.data_mut()[i] = orig - h;
            let minus = logit_and_signature(&probe_model, x)?;
            probe_model.parameters_mut()[t].value.data_mut()[i] = orig;
            tally(grad.data()[i] as f64, plus, minus, &mut report);
        }
    }
    Ok(report)
}
