//! Nadam: Adam with a Nesterov look-ahead on the first moment.
//!
//! Follows the momentum-schedule formulation used by Keras and PyTorch:
//!
//! ```text
//! μ_t   = β1 · (1 − ½ · 0.96^(t · ψ))
//! m     = β1 · m + (1 − β1) · g
//! v     = β2 · v + (1 − β2) · g²
//! m̂     = μ_{t+1} · m / (1 − Π_{i≤t+1} μ_i) + (1 − μ_t) · g / (1 − Π_{i≤t} μ_i)
//! v̂     = v / (1 − β2^t)
//! θ    -= lr · m̂ / (√v̂ + ε)
//! ```

use crate::error::{Result, TensorError};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NadamConfig {
    pub learning_rate: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub epsilon: f32,
    /// ψ in the momentum schedule.
    pub momentum_decay: f32,
}

impl Default for NadamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            momentum_decay: 4e-3,
        }
    }
}

impl NadamConfig {
    pub fn with_learning_rate(learning_rate: f32) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.beta1 > 0.0
            && self.beta1 < 1.0
            && self.beta2 > 0.0
            && self.beta2 < 1.0
            && self.epsilon > 0.0
            && self.momentum_decay >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(TensorError::InvalidArgument(format!("invalid Nadam configuration {self:?}")))
        }
    }

    fn mu(&self, step: u64) -> f64 {
        let b1 = self.beta1 as f64;
        b1 * (1.0 - 0.5 * 0.96f64.powf(step as f64 * self.momentum_decay as f64))
    }
}

/// A trainable tensor with its gradient and optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub value: Tensor,
    pub grad: Tensor,
    pub first_moment: Tensor,
    pub second_moment: Tensor,
    pub step: u64,
}

impl Parameter {
    pub fn new(value: Tensor) -> Self {
        let shape = value.shape().to_vec();
        Self {
            value,
            grad: Tensor::zeros(&shape),
            first_moment: Tensor::zeros(&shape),
            second_moment: Tensor::zeros(&shape),
            step: 0,
        }
    }

    pub fn shape(&self) -> &[usize] {
        self.value.shape()
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    /// Add `g` into the gradient buffer.
    pub fn accumulate(&mut self, g: &Tensor) -> Result<()> {
        if g.shape() != self.grad.shape() {
            return Err(TensorError::Shape(format!(
                "gradient {:?} for parameter {:?}",
                g.shape(),
                self.grad.shape()
            )));
        }
        self.grad
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .for_each(|(a, &b)| *a += b);
        Ok(())
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

/// Apply one Nadam update to every parameter, then clear the gradients.
pub fn nadam_step<'a, I>(params: I, config: &NadamConfig) -> Result<()>
where
    I: IntoIterator<Item = &'a mut Parameter>,
{
    config.validate()?;
    for p in params {
        let t = p.step + 1;
        let mu_t = config.mu(t);
        let mu_next = config.mu(t + 1);
        let product_t: f64 = (1..=t).map(|i| config.mu(i)).product();
        let product_next = product_t * mu_next;

        let b1 = config.beta1;
        let b2 = config.beta2;
        let moment_coef = (mu_next / (1.0 - product_next)) as f32;
        let grad_coef = ((1.0 - mu_t) / (1.0 - product_t)) as f32;
        let v_correction = (1.0 - (config.beta2 as f64).powf(t as f64)) as f32;

        let Parameter {
            value,
            grad,
            first_moment,
            second_moment,
            ..
        } = p;
        for (((theta, &g), m), v) in value
            .data_mut()
            .iter_mut()
            .zip(grad.data())
            .zip(first_moment.data_mut())
            .zip(second_moment.data_mut())
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = moment_coef * *m + grad_coef * g;
            let v_hat = *v / v_correction;
            *theta -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
        }
        p.step = t;
        p.zero_grad();
        p.value.ensure_finite("nadam step")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_param(v: f32) -> Parameter {
        Parameter::new(Tensor::scalar(v))
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut p = Parameter::new(Tensor::from_slice(&[3], &[0.5, -1.0, 2.0]).unwrap());
        let before = p.value.clone();
        nadam_step([&mut p], &NadamConfig::default()).unwrap();
        assert_eq!(p.value, before);
        assert_eq!(p.step, 1);
    }

    #[test]
    fn first_step_matches_hand_evaluation() {
        // μ1 = 0.9(1 − ½·0.96^0.004) = 0.45007347, μ2 = 0.45014693
        // m̂ = μ2·0.1/(1 − μ1μ2) + 1 = 1.056452, v̂ = 1
        let mut p = scalar_param(0.0);
        p.grad = Tensor::scalar(1.0);
        nadam_step([&mut p], &NadamConfig::with_learning_rate(1e-3)).unwrap();
        let theta = p.value.data()[0];
        assert!((theta - (-1.056452e-3)).abs() < 2e-9, "theta {theta}");
        // Gradient buffer is cleared after the step.
        assert_eq!(p.grad.data(), &[0.0]);
    }

    #[test]
    fn minimises_a_quadratic() {
        let mut p = scalar_param(1.0);
        let cfg = NadamConfig::with_learning_rate(0.05);
        for _ in 0..200 {
            let theta = p.value.data()[0];
            p.grad = Tensor::scalar(2.0 * theta);
            nadam_step([&mut p], &cfg).unwrap();
        }
        assert!(p.value.data()[0].abs() < 0.05, "theta {}", p.value.data()[0]);
        assert_eq!(p.step, 200);
    }

    #[test]
    fn step_is_bit_reproducible() {
        let run = || {
            let mut p = Parameter::new(Tensor::from_slice(&[4], &[0.3, -0.2, 1.1, 0.0]).unwrap());
            for k in 0..25 {
                let g: Vec<f32> = p.value.data().iter().map(|v| v * 1.7 + k as f32 * 0.01).collect();
                p.grad = Tensor::from_slice(&[4], &g).unwrap();
                nadam_step([&mut p], &NadamConfig::default()).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut p = scalar_param(0.0);
        let cfg = NadamConfig { beta1: 1.0, ..NadamConfig::default() };
        assert!(nadam_step([&mut p], &cfg).is_err());
    }
}
