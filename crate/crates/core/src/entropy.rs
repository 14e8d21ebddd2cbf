//! Softmax and entropy over top-K logit vectors. All logarithms are natural.

use crate::error::{Result, SlsError};

/// Numerically stable softmax (max-subtracted). Entries equal to `-inf` get zero mass.
pub fn softmax(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= total);
    out
}

/// `H = -sum_i p_i ln(p_i + epsilon)` with `p = softmax(values)`, in nats.
pub fn compute_entropy(values: &[f64], epsilon: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(SlsError::Input("entropy of an empty vector".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(SlsError::Input(format!("non-finite logit {v} in entropy input")));
    }
    Ok(entropy_unchecked(values, epsilon))
}

pub(crate) fn entropy_unchecked(values: &[f64], epsilon: f64) -> f64 {
    -softmax(values).iter().map(|&p| p * (p + epsilon).ln()).sum::<f64>()
}
