//! Checked-in golden trace and the oracle's diagnostics for it.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use sls_core::{extract_top_k, read_trace, write_trace, SlsConfig, SlsProcessor, SplitMix64, TraceHeader, TraceRecord};

use super::{max_abs_diff, oracle_run, OracleParams, OracleStep};

pub const STEPS: usize = 16;
pub const VOCAB: usize = 1024;
pub const K: usize = 512;
pub const SEED: u64 = 20_240_611;
/// Steps whose leading logit is boosted far enough to stay below the gate.
pub const PEAKED: [usize; 3] = [3, 8, 12];

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("data")
}

pub fn trace_path() -> PathBuf {
    data_dir().join("golden.slstrace.jsonl")
}

pub fn oracle_path() -> PathBuf {
    data_dir().join("golden.oracle.jsonl")
}

/// Gaussian logits over the vocabulary, with a few confidently peaked steps.
pub fn generate() -> (TraceHeader, Vec<TraceRecord>) {
    let mut rng = SplitMix64::new(SEED);
    let records = (0..STEPS)
        .map(|t| {
            let mut full: Vec<f64> = (0..VOCAB).map(|_| 1.5 * rng.next_gaussian()).collect();
            if PEAKED.contains(&t) {
                full[(rng.next_u64() % VOCAB as u64) as usize] += 25.0;
            }
            TraceRecord::from_slice(&extract_top_k(&full, K, t).unwrap(), None)
        })
        .collect();
    (TraceHeader::new(VOCAB, K, "golden-gaussian", SEED), records)
}

pub fn bless() {
    let (header, records) = generate();
    fs::create_dir_all(data_dir()).unwrap();
    write_trace(trace_path(), &header, &records).unwrap();
    let rows: Vec<Vec<f64>> = records.iter().map(|r| r.values.clone()).collect();
    let mut f = fs::File::create(oracle_path()).unwrap();
    for step in oracle_run(&rows, &OracleParams::default()) {
        writeln!(f, "{}", serde_json::to_string(&step).unwrap()).unwrap();
    }
}

pub fn load_oracle() -> Vec<OracleStep> {
    fs::read_to_string(oracle_path())
        .expect("golden oracle file; regenerate with `cargo test -p sls-cli --test golden -- --ignored`")
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol
}

/// Compares the library pipeline on the checked-in trace with the checked-in
/// oracle output. Returns the largest deviation seen, or a description of the
/// first mismatch.
pub fn check(tol: f64) -> Result<f64, String> {
    let (header, records) = read_trace(trace_path()).map_err(|e| e.to_string())?;
    let expected = load_oracle();
    if expected.len() != records.len() || records.len() != STEPS || header.k != K {
        return Err(format!("golden files hold {} records and {} oracle steps", records.len(), expected.len()));
    }
    let mut proc = SlsProcessor::new(SlsConfig::default());
    let mut worst = 0.0f64;
    let mut gated = 0;
    for (rec, exp) in records.iter().zip(&expected) {
        let (out, d) = proc.step(&rec.to_slice()).map_err(|e| e.to_string())?;
        let t = d.step;
        if d.gate_fired != exp.gate_fired || d.m_eff != exp.m_eff {
            return Err(format!("step {t}: gate {} m_eff {:?}, oracle gate {} m_eff {:?}", d.gate_fired, d.m_eff, exp.gate_fired, exp.m_eff));
        }
        gated += d.gate_fired as usize;
        let mut diffs = vec![
            (d.entropy_pre - exp.entropy_pre).abs(),
            (d.entropy_post - exp.entropy_post).abs(),
            max_abs_diff(&out.values, &exp.adjusted),
        ];
        if !close(d.gap, exp.gap, tol) {
            return Err(format!("step {t}: gap {} vs {}", d.gap, exp.gap));
        }
        match (d.alpha, exp.alpha) {
            (Some(a), Some(b)) => diffs.push((a - b).abs()),
            (None, None) => {}
            other => return Err(format!("step {t}: alpha {other:?}")),
        }
        if let (Some(a), Some(b)) = (&d.singular_values, &exp.singular_values) {
            diffs.push(max_abs_diff(a, b));
        }
        let step_worst = diffs.into_iter().fold(0.0, f64::max);
        if step_worst > tol {
            return Err(format!("step {t}: deviation {step_worst:.3e} exceeds {tol:e}"));
        }
        worst = worst.max(step_worst);
    }
    if gated == 0 || gated == STEPS {
        return Err(format!("golden trace should mix gated and ungated steps, got {gated} gated"));
    }
    Ok(worst)
}
