//! Reference decoding transforms over the same top-K slices: greedy choice,
//! temperature scaling, and token-level entropy minimisation.

use serde::{Deserialize, Serialize};

use crate::entropy::compute_entropy;
use crate::error::{Result, SlsError};
use crate::topk::TopKSlice;

/// Index (into `values`) of the maximum, lowest vocabulary id winning ties.
pub(crate) fn argmax_position(values: &[f64], indices: &[usize]) -> Option<usize> {
    (0..values.len()).reduce(|best, i| {
        if values[i] > values[best] || (values[i] == values[best] && indices[i] < indices[best]) {
            i
        } else {
            best
        }
    })
}

/// Vocabulary id with the largest value; ties go to the lower id.
pub fn greedy_select(slice: &TopKSlice) -> Option<usize> {
    argmax_position(&slice.values, &slice.indices).map(|p| slice.indices[p])
}

/// Divides every value by `tau`.
pub fn temperature_scale(slice: &TopKSlice, tau: f64) -> Result<TopKSlice> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(SlsError::Input(format!("temperature must be positive and finite, got {tau}")));
    }
    Ok(TopKSlice {
        values: slice.values.iter().map(|v| v / tau).collect(),
        indices: slice.indices.clone(),
        step: slice.step,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmInfConfig {
    pub steps: usize,
    pub learning_rate: f64,
    /// Entropy (nats) at or below which the slice is left alone.
    pub entropy_threshold: f64,
}

impl Default for EmInfConfig {
    fn default() -> Self {
        EmInfConfig {
            steps: 10,
            learning_rate: 0.1,
            entropy_threshold: 0.3,
        }
    }
}

impl EmInfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(SlsError::Config("eminf steps must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(SlsError::Config("eminf learning rate must be positive".into()));
        }
        if !(self.entropy_threshold >= 0.0 && self.entropy_threshold.is_finite()) {
            return Err(SlsError::Config("eminf entropy threshold must be >= 0".into()));
        }
        Ok(())
    }
}

/// Softmax entropy (no stabiliser) and its gradient `dH/dv_i = -p_i (ln p_i + H)`.
pub fn entropy_and_gradient(values: &[f64]) -> (f64, Vec<f64>) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    let log_p: Vec<f64> = values.iter().map(|v| v - log_z).collect();
    let h = -log_p.iter().map(|lp| lp.exp() * lp).sum::<f64>();
    let grad = log_p.iter().map(|lp| -lp.exp() * (lp + h)).collect();
    (h, grad)
}

/// Gradient descent on the slice's softmax entropy, gated by `entropy_threshold`.
pub fn entropy_minimize(slice: &TopKSlice, config: &EmInfConfig) -> Result<TopKSlice> {
    config.validate()?;
    let h0 = compute_entropy(&slice.values, 1e-12)?;
    if h0 <= config.entropy_threshold {
        return Ok(slice.clone());
    }
    let mut values = slice.values.clone();
    for iter in 0..config.steps {
        let (_, grad) = entropy_and_gradient(&values);
        values
            .iter_mut()
            .zip(&grad)
            .for_each(|(v, g)| *v -= config.learning_rate * g);
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SlsError::Numerical {
                step: iter,
                message: format!("entropy descent diverged on decode step {}", slice.step),
            });
        }
    }
    Ok(TopKSlice {
        values,
        indices: slice.indices.clone(),
        step: slice.step,
    })
}
