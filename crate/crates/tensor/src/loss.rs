use crate::activation::sigmoid_scalar;
use crate::error::{Result, TensorError};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before taking logs.
pub const PROB_CLAMP: f32 = 1e-7;

fn check_label(y: f32) -> Result<()> {
    if y == 0.0 || y == 1.0 {
        Ok(())
    } else {
        Err(TensorError::InvalidArgument(format!("binary label must be 0 or 1, got {y}")))
    }
}

/// Binary cross-entropy of probability `p` against label `y`.
pub fn bce_loss(p: f32, y: f32) -> Result<f32> {
    check_label(y)?;
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    Ok(-(y * p.ln() + (1.0 - y) * (1.0 - p).ln()))
}

/// Binary cross-entropy of `sigmoid(logit)` and its derivative with respect to
/// the logit, `sigmoid(logit) - y`.
///
/// Uses `max(z, 0) - z*y + ln(1 + e^-|z|)` so large logits never overflow. The
/// loss is capped at the value the clamped probability would give.
pub fn bce_with_logits(logit: f32, y: f32) -> Result<(f32, f32)> {
    check_label(y)?;
    let z = logit;
    let loss = z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
    let cap = -(PROB_CLAMP.ln());
    Ok((loss.min(cap), sigmoid_scalar(z) - y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction_is_near_zero() {
        assert!(bce_loss(1.0, 1.0).unwrap() < 2e-7);
        assert!(bce_loss(0.0, 0.0).unwrap() < 2e-7);
    }

    #[test]
    fn half_probability_is_ln2() {
        let l = bce_loss(0.5, 1.0).unwrap();
        assert!((l - std::f32::consts::LN_2).abs() < 1e-6);
        let (fused, _) = bce_with_logits(0.0, 1.0).unwrap();
        assert!((fused - std::f32::consts::LN_2).abs() < 1e-6);
    }

    #[test]
    fn fused_form_agrees_with_probability_form() {
        for &z in &[-6.0f32, -1.3, -0.2, 0.0, 0.4, 2.2, 7.5] {
            for &y in &[0.0, 1.0] {
                let (fused, _) = bce_with_logits(z, y).unwrap();
                let plain = bce_loss(sigmoid_scalar(z), y).unwrap();
                // 1 - p loses digits in f32 as p saturates; compare relatively.
                assert!((fused - plain).abs() <= 1e-4 * plain.max(1.0), "z={z} y={y}: {fused} vs {plain}");
            }
        }
    }

    #[test]
    fn fused_gradient_matches_finite_differences() {
        let h = 1e-2f32;
        for &z in &[-3.0f32, -0.5, 0.0, 0.8, 2.5] {
            for &y in &[0.0, 1.0] {
                let (_, g) = bce_with_logits(z, y).unwrap();
                assert_eq!(g, sigmoid_scalar(z) - y);
                let up = bce_with_logits(z + h, y).unwrap().0;
                let down = bce_with_logits(z - h, y).unwrap().0;
                let fd = (up - down) / (2.0 * h);
                assert!((fd - g).abs() / g.abs().max(1.0) < 1e-3, "z={z} y={y}: fd {fd} vs {g}");
            }
        }
    }

    #[test]
    fn huge_logits_do_not_overflow() {
        let (l, g) = bce_with_logits(500.0, 0.0).unwrap();
        assert!(l.is_finite() && (g - 1.0).abs() < 1e-6);
        let (l, _) = bce_with_logits(-500.0, 0.0).unwrap();
        assert!(l.abs() < 1e-6);
    }

    #[test]
    fn non_binary_label_is_rejected() {
        assert!(bce_loss(0.3, 0.5).is_err());
        assert!(bce_with_logits(0.3, 2.0).is_err());
    }
}
