//! Run reports: line-delimited JSON plus a plain-text summary table.
//!
//! Every line carries a `section` tag. Lines in the `timing` section hold wall
//! clock measurements and are the only non-reproducible content.

use serde::Serialize;
use sls_core::{Method, MethodSettings, Sampler, StepDiagnostics, TraceHeader};

#[derive(Debug, Clone, Serialize)]
pub struct TraceInfo {
    pub source_label: String,
    pub vocab_size: usize,
    pub k: usize,
    pub seed: u64,
    pub records: usize,
}

impl TraceInfo {
    pub fn new(header: &TraceHeader, records: usize) -> Self {
        TraceInfo {
            source_label: header.source_label.clone(),
            vocab_size: header.vocab_size,
            k: header.k,
            seed: header.seed,
            records,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub sampler: Sampler,
    pub seed: u64,
    #[serde(flatten)]
    pub settings: MethodSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRow {
    #[serde(flatten)]
    pub diagnostics: StepDiagnostics,
    pub token: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub steps_total: usize,
    pub steps_gated: usize,
    pub mean_entropy_pre: f64,
    pub mean_entropy_post_on_gated_steps: Option<f64>,
    pub mean_alpha_on_gated_steps: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl Summary {
    pub fn from_steps(steps: &[StepDiagnostics]) -> Self {
        let gated = || steps.iter().filter(|d| d.gate_fired);
        Summary {
            steps_total: steps.len(),
            steps_gated: gated().count(),
            mean_entropy_pre: mean(steps.iter().map(|d| d.entropy_pre)).unwrap_or(0.0),
            mean_entropy_post_on_gated_steps: mean(gated().map(|d| d.entropy_post)),
            mean_alpha_on_gated_steps: mean(gated().filter_map(|d| d.alpha)),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub wall_time_per_step_us: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub method: Method,
    pub trace: TraceInfo,
    pub config_echo: ConfigEcho,
    pub per_step: Vec<StepRow>,
    pub summary: Summary,
    pub timing: Timing,
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    section: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    method: Option<Method>,
    #[serde(flatten)]
    body: &'a T,
}

pub(crate) fn line<T: Serialize>(section: &'static str, method: Option<Method>, body: &T) -> String {
    let mut s = serde_json::to_string(&Tagged { section, method, body }).expect("report line serialises");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct Header<'a> {
    trace: &'a TraceInfo,
    config: &'a ConfigEcho,
}

impl RunReport {
    pub fn diagnostics(&self) -> impl Iterator<Item = &StepDiagnostics> {
        self.per_step.iter().map(|r| &r.diagnostics)
    }

    pub fn to_jsonl(&self) -> String {
        let m = Some(self.method);
        let mut out = line("header", m, &Header { trace: &self.trace, config: &self.config_echo });
        for row in &self.per_step {
            out.push_str(&line("step", None, row));
        }
        out.push_str(&line("summary", m, &self.summary));
        out.push_str(&line("timing", m, &self.timing));
        out
    }
}

/// Drops `timing` lines so two reports can be compared byte for byte.
pub fn without_timing(report: &str) -> String {
    report
        .lines()
        .filter(|l| !l.starts_with("{\"section\":\"timing\""))
        .map(|l| format!("{l}\n"))
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"))
}

/// Summary rows `(method, summary, mean entropy_post on sls-gated steps, us/step)`.
pub fn text_table(rows: &[(Method, &Summary, Option<f64>, f64)]) -> String {
    let mut out = format!(
        "{:<12} {:>6} {:>6} {:>12} {:>14} {:>12} {:>16} {:>10}\n",
        "method", "steps", "gated", "H_pre", "H_post(gated)", "alpha", "H_post(sls-gate)", "us/step"
    );
    for (m, s, on_sls, us) in rows {
        out.push_str(&format!(
            "{:<12} {:>6} {:>6} {:>12.6} {:>14} {:>12} {:>16} {:>10.2}\n",
            m.as_str(),
            s.steps_total,
            s.steps_gated,
            s.mean_entropy_pre,
            fmt_opt(s.mean_entropy_post_on_gated_steps),
            fmt_opt(s.mean_alpha_on_gated_steps),
            fmt_opt(*on_sls),
            us
        ));
    }
    out
}
