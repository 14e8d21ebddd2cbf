//! The per-stream sculpting state machine.
//!
//! Each step appends the raw top-K values to a sliding buffer, measures the
//! entropy of the slice, and when the gate fires rescales the component of the
//! slice lying in the dominant buffer subspace by `alpha` and damps the rest by
//! `gamma`. On gated steps the adjusted values replace the newest buffer row.
//!
//! Buffer rows are rank-aligned: column `i` of every row holds that step's
//! `i`-th largest logit (or its adjusted value), independent of token identity.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::config::SlsConfig;
use crate::entropy::compute_entropy;
use crate::error::{Result, SlsError};
use crate::spectral::{center_buffer, project_split, recombine, spectral_basis};
use crate::topk::{extract_top_k, logit_gap, scatter_adjusted, TopKSlice};

/// FIFO of the most recent stored top-K value vectors, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct SlidingLogitBuffer {
    rows: VecDeque<Vec<f64>>,
    capacity: usize,
}

impl SlidingLogitBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "buffer capacity must be positive");
        SlidingLogitBuffer {
            rows: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.rows.iter().map(Vec::as_slice)
    }

    /// Appends a row, returning the evicted oldest row when at capacity.
    pub fn push(&mut self, row: Vec<f64>) -> Option<Vec<f64>> {
        let evicted = if self.rows.len() == self.capacity {
            self.rows.pop_front()
        } else {
            None
        };
        self.rows.push_back(row);
        evicted
    }

    fn replace_newest(&mut self, row: Vec<f64>) {
        if let Some(last) = self.rows.back_mut() {
            *last = row;
        }
    }

    fn undo_push(&mut self, evicted: Option<Vec<f64>>) {
        self.rows.pop_back();
        if let Some(row) = evicted {
            self.rows.push_front(row);
        }
    }

    pub fn clear(&mut self) {
        self.rows.clear();
    }
}

/// Per-step telemetry. `alpha`, `m_eff` and `singular_values` are present only
/// on gated steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub entropy_pre: f64,
    /// Top-two logit gap; `null` in JSON when the slice has one entry.
    #[serde(with = "gap_json")]
    pub gap: f64,
    pub gate_fired: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_eff: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub singular_values: Option<Vec<f64>>,
    pub entropy_post: f64,
}

mod gap_json {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(gap: &f64, s: S) -> Result<S::Ok, S::Error> {
        if gap.is_finite() {
            s.serialize_f64(*gap)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `1 + sigmoid((h - h_0)/s_h - (d_0 - gap)/s_d) * (alpha_max - 1)`.
///
/// An infinite gap (single-entry slice) saturates at `alpha_max`. For finite
/// arguments the result lies strictly inside `(1, alpha_max)` as long as the
/// sigmoid argument stays within the range where its tails are representable
/// in f64 (roughly `|x| < 36`).
pub fn adaptive_alpha(h: f64, gap: f64, config: &SlsConfig) -> f64 {
    let arg = (h - config.h_0) / config.s_h - (config.d_0 - gap) / config.s_d;
    1.0 + sigmoid(arg) * (config.alpha_max - 1.0)
}

/// Runs one decode step through the transform.
///
/// Returns the adjusted slice (values positionally aligned with the input
/// indices, not re-sorted) and the step's diagnostics. The buffer is left
/// untouched when an error is returned.
pub fn sls_step(
    slice: &TopKSlice,
    buffer: &mut SlidingLogitBuffer,
    config: &SlsConfig,
) -> Result<(TopKSlice, StepDiagnostics)> {
    if slice.values.len() != config.k || slice.indices.len() != config.k {
        return Err(SlsError::Input(format!(
            "step {}: slice carries {} values and {} indices, config expects k = {}",
            slice.step,
            slice.values.len(),
            slice.indices.len(),
            config.k
        )));
    }
    if buffer.capacity() != config.window {
        return Err(SlsError::Input(format!(
            "buffer capacity {} does not match window {}",
            buffer.capacity(),
            config.window
        )));
    }
    let entropy_pre = compute_entropy(&slice.values, config.epsilon)?;
    let gap = logit_gap(slice);
    let unchanged = |entropy_pre| {
        (
            slice.clone(),
            StepDiagnostics {
                step: slice.step,
                entropy_pre,
                gap,
                gate_fired: false,
                alpha: None,
                m_eff: None,
                singular_values: None,
                entropy_post: entropy_pre,
            },
        )
    };

    let evicted = buffer.push(slice.values.clone());
    let uncertain = !config.entropy_gate || entropy_pre > config.h_thres;
    if !uncertain || buffer.len() < 2 {
        return Ok(unchanged(entropy_pre));
    }

    let outcome = adjust(slice, buffer, config, entropy_pre, gap);
    match outcome {
        Ok(Some((values, diag))) => {
            buffer.replace_newest(values.clone());
            let adjusted = TopKSlice {
                values,
                indices: slice.indices.clone(),
                step: slice.step,
            };
            Ok((adjusted, diag))
        }
        Ok(None) => Ok(unchanged(entropy_pre)),
        Err(e) => {
            buffer.undo_push(evicted);
            Err(e)
        }
    }
}

fn adjust(
    slice: &TopKSlice,
    buffer: &SlidingLogitBuffer,
    config: &SlsConfig,
    entropy_pre: f64,
    gap: f64,
) -> Result<Option<(Vec<f64>, StepDiagnostics)>> {
    let rows: Vec<&[f64]> = buffer.rows().collect();
    let centered = center_buffer(&rows)?;
    let Some(basis) = spectral_basis(&centered, config.rank, config.svd_tol)? else {
        return Ok(None);
    };
    let alpha = if config.adaptive_rescale {
        adaptive_alpha(entropy_pre, gap, config)
    } else {
        config.alpha_max
    };
    let (in_span, residual) = project_split(&slice.values, &basis)?;
    let values = recombine(&in_span, &residual, alpha, config.gamma);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(SlsError::Numerical {
            step: slice.step,
            message: "adjusted logits are not finite".into(),
        });
    }
    let entropy_post = compute_entropy(&values, config.epsilon)?;
    let diag = StepDiagnostics {
        step: slice.step,
        entropy_pre,
        gap,
        gate_fired: true,
        alpha: Some(alpha),
        m_eff: Some(basis.rank()),
        singular_values: Some(basis.singular_values().to_vec()),
        entropy_post,
    };
    Ok(Some((values, diag)))
}

/// One decode stream's state: validated config, sliding buffer and step counter.
///
/// Distinct streams need distinct processors. A processor may move between
/// threads but is mutated by one owner at a time.
#[derive(Debug, Clone)]
pub struct SlsProcessor {
    config: SlsConfig,
    buffer: SlidingLogitBuffer,
    steps: usize,
    last: Option<StepDiagnostics>,
}

impl SlsProcessor {
    pub fn new(config: SlsConfig) -> Self {
        let buffer = SlidingLogitBuffer::new(config.window);
        SlsProcessor {
            config,
            buffer,
            steps: 0,
            last: None,
        }
    }

    pub fn config(&self) -> &SlsConfig {
        &self.config
    }

    pub fn buffer(&self) -> &SlidingLogitBuffer {
        &self.buffer
    }

    /// Number of steps processed since construction or the last reset.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn last_diagnostics(&self) -> Option<&StepDiagnostics> {
        self.last.as_ref()
    }

    pub fn step(&mut self, slice: &TopKSlice) -> Result<(TopKSlice, StepDiagnostics)> {
        let (adjusted, diag) = sls_step(slice, &mut self.buffer, &self.config)?;
        self.steps += 1;
        self.last = Some(diag.clone());
        Ok((adjusted, diag))
    }

    /// Full-vocabulary entry point: top-K extraction, one step, and scatter back
    /// with `-inf` on every position outside the top K. State is unchanged on error.
    pub fn process_scores(&mut self, scores: &[f64]) -> Result<Vec<f64>> {
        let slice = extract_top_k(scores, self.config.k, self.steps)?;
        let (adjusted, _) = self.step(&slice)?;
        scatter_adjusted(&adjusted, scores.len())
    }

    pub fn reset(&mut self) {
        self.buffer.clear();
        self.steps = 0;
        self.last = None;
    }
}
