use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SlsError};

/// One decode step's top-K logits and the vocabulary ids they belong to.
///
/// Slices produced by [`extract_top_k`] are sorted non-increasing. Adjusted
/// slices keep positional correspondence with their source and may be unsorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKSlice {
    pub values: Vec<f64>,
    pub indices: Vec<usize>,
    pub step: usize,
}

impl TopKSlice {
    pub fn k(&self) -> usize {
        self.values.len()
    }

    /// Checks the sorted-slice invariants against a vocabulary size.
    pub fn validate(&self, vocab_size: usize) -> Result<()> {
        if self.values.len() != self.indices.len() {
            return Err(SlsError::Validation(format!(
                "step {}: {} values but {} indices",
                self.step,
                self.values.len(),
                self.indices.len()
            )));
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(SlsError::Validation(format!("step {}: non-finite value {v}", self.step)));
        }
        if self.values.windows(2).any(|w| w[0] < w[1]) {
            return Err(SlsError::Validation(format!(
                "step {}: values are not sorted non-increasing",
                self.step
            )));
        }
        let mut seen = std::collections::HashSet::with_capacity(self.indices.len());
        for &i in &self.indices {
            if i >= vocab_size {
                return Err(SlsError::Validation(format!(
                    "step {}: index {i} outside vocabulary of size {vocab_size}",
                    self.step
                )));
            }
            if !seen.insert(i) {
                return Err(SlsError::Validation(format!("step {}: duplicate index {i}", self.step)));
            }
        }
        Ok(())
    }
}

/// Descending by value, then ascending by vocabulary id.
fn rank_order(logits: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| logits[b].total_cmp(&logits[a]).then(a.cmp(&b))
}

/// Returns the `k` largest logits in descending order with their vocabulary ids.
pub fn extract_top_k(full_logits: &[f64], k: usize, step: usize) -> Result<TopKSlice> {
    if k == 0 || full_logits.len() < k {
        return Err(SlsError::Config(format!(
            "k = {k} requires a vocabulary of at least k entries, got {}",
            full_logits.len()
        )));
    }
    if let Some(pos) = full_logits.iter().position(|v| !v.is_finite()) {
        return Err(SlsError::Input(format!(
            "non-finite logit {} at vocabulary index {pos}",
            full_logits[pos]
        )));
    }
    let mut order: Vec<usize> = (0..full_logits.len()).collect();
    let cmp = rank_order(full_logits);
    if k < order.len() {
        order.select_nth_unstable_by(k - 1, &cmp);
        order.truncate(k);
    }
    order.sort_unstable_by(&cmp);
    Ok(TopKSlice {
        values: order.iter().map(|&i| full_logits[i]).collect(),
        indices: order,
        step,
    })
}

/// `values[0] - values[1]`; `+inf` when the slice holds a single logit.
pub fn logit_gap(slice: &TopKSlice) -> f64 {
    match slice.values.as_slice() {
        [first, second, ..] => first - second,
        _ => f64::INFINITY,
    }
}

/// Writes adjusted values back into a full-vocabulary vector, masking every
/// other position with `-inf`.
pub fn scatter_adjusted(adjusted: &TopKSlice, vocab_size: usize) -> Result<Vec<f64>> {
    let mut full = vec![f64::NEG_INFINITY; vocab_size];
    for (&i, &v) in adjusted.indices.iter().zip(&adjusted.values) {
        let slot = full.get_mut(i).ok_or_else(|| {
            SlsError::Input(format!("index {i} out of range for vocabulary of size {vocab_size}"))
        })?;
        *slot = v;
    }
    Ok(full)
}
