//! Per-step latency of the sculpting step on synthetic streams.

use std::time::Instant;

use serde::Serialize;
use sls_core::{extract_top_k, SlidingLogitBuffer, SlsConfig, SplitMix64, TopKSlice};

use crate::error::CliResult;

#[derive(Debug, Clone, Serialize)]
pub struct LatencyStats {
    pub steps: usize,
    pub gate_rate: f64,
    pub median_us: f64,
    pub p99_us: f64,
    pub mean_us: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub k: usize,
    pub window: usize,
    pub rank: usize,
    /// Every timed step passes the entropy gate.
    pub gated: LatencyStats,
    /// Every timed step is confidently peaked and short-circuits at the gate.
    pub ungated: LatencyStats,
}

/// Sorted Gaussian top-K slices; `peak` is added to the leading logit.
pub fn synthetic_slices(k: usize, count: usize, peak: f64, seed: u64) -> Vec<TopKSlice> {
    let mut rng = SplitMix64::new(seed);
    (0..count)
        .map(|step| {
            let mut full: Vec<f64> = (0..k).map(|_| rng.next_gaussian()).collect();
            full[0] += peak;
            extract_top_k(&full, k, step).expect("finite synthetic logits")
        })
        .collect()
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() as f64 - 1.0) * q).round() as usize;
    sorted[idx]
}

/// Times `steps` calls of the step function after a warm-up that fills the buffer.
pub fn time_steps(config: &SlsConfig, slices: &[TopKSlice], warmup: usize) -> CliResult<LatencyStats> {
    let mut buffer = SlidingLogitBuffer::new(config.window);
    for s in &slices[..warmup] {
        sls_core::sls_step(s, &mut buffer, config)?;
    }
    let timed = &slices[warmup..];
    let mut micros = Vec::with_capacity(timed.len());
    let mut gated = 0usize;
    for s in timed {
        let start = Instant::now();
        let (out, diag) = sls_core::sls_step(s, &mut buffer, config)?;
        micros.push(start.elapsed().as_secs_f64() * 1e6);
        std::hint::black_box(out);
        gated += diag.gate_fired as usize;
    }
    let mean_us = micros.iter().sum::<f64>() / micros.len() as f64;
    micros.sort_by(f64::total_cmp);
    Ok(LatencyStats {
        steps: timed.len(),
        gate_rate: gated as f64 / timed.len() as f64,
        median_us: percentile(&micros, 0.5),
        p99_us: percentile(&micros, 0.99),
        mean_us,
    })
}

pub fn run_bench(config: &SlsConfig, steps: usize, seed: u64) -> CliResult<BenchReport> {
    let steps = steps.max(1);
    let warmup = config.window;
    let high = synthetic_slices(config.k, steps + warmup, 0.0, seed);
    let low = synthetic_slices(config.k, steps + warmup, 50.0, seed ^ 0x5eed);
    Ok(BenchReport {
        k: config.k,
        window: config.window,
        rank: config.rank,
        gated: time_steps(config, &high, warmup)?,
        ungated: time_steps(config, &low, warmup)?,
    })
}
