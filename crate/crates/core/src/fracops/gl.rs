use super::FractionalOrder;
use crate::error::{invalid, Result};
use crate::par::Strategy;

/// Grünwald–Letnikov weights `(−1)^j C(α, j)` for `j < len`.
pub fn gl_weights(alpha: f64, len: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(len);
    let mut prev = 1.0;
    for j in 0..len {
        if j > 0 {
            prev *= 1.0 - (alpha + 1.0) / j as f64;
        }
        w.push(prev);
    }
    w
}

/// Order-`α` derivative of an at-rest sampled signal by the
/// Grünwald–Letnikov sum. First-order accurate in `step`; O(N²).
pub fn caputo_gl_oracle(samples: &[f64], order: FractionalOrder, step: f64) -> Result<Vec<f64>> {
    caputo_gl_oracle_with(Strategy::default(), samples, order, step)
}

pub fn caputo_gl_oracle_with(
    strategy: Strategy,
    samples: &[f64],
    order: FractionalOrder,
    step: f64,
) -> Result<Vec<f64>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(invalid(format!("step must be > 0, got {step}")));
    }
    if samples.len() < 2 {
        return Err(invalid("signal needs at least two samples"));
    }
    let alpha = order.value();
    let w = gl_weights(alpha, samples.len());
    let scale = step.powf(-alpha);
    Ok(strategy.map_range(samples.len(), |k| {
        let acc: f64 = (0..=k).map(|j| w[j] * samples[k - j]).sum();
        acc * scale
    }))
}
