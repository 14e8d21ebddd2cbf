//! Input generators shared by the benchmarks.

use sls_core::{extract_top_k, SplitMix64, TopKSlice};

/// Sorted Gaussian top-K slices drawn from a vocabulary of `2 * k`.
/// `peak` is added to one logit per step; a large peak keeps steps below the gate.
pub fn slices(k: usize, count: usize, peak: f64, seed: u64) -> Vec<TopKSlice> {
    let mut rng = SplitMix64::new(seed);
    (0..count)
        .map(|step| {
            let mut full: Vec<f64> = (0..2 * k).map(|_| rng.next_gaussian()).collect();
            full[step % (2 * k)] += peak;
            extract_top_k(&full, k, step).expect("finite logits")
        })
        .collect()
}

/// Raw `rows x cols` Gaussian buffer.
pub fn buffer(rows: usize, cols: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = SplitMix64::new(seed);
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.next_gaussian()).collect())
        .collect()
}
