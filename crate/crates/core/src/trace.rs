//! Line-delimited JSON logit traces (`*.slstrace.jsonl`).
//!
//! Line 1 is the header object, every further line one step:
//!
//! ```text
//! {"format_version":1,"vocab_size":N,"k":K,"source_label":S,"seed":U}
//! {"step":t,"indices":[...],"values":[...],"chosen_token":c|null}
//! ```
//!
//! Values are stored as 32-bit floats in their shortest round-trip decimal form
//! and widened to f64 on load.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SlsError};
use crate::topk::TopKSlice;

pub const FORMAT_VERSION: u32 = 1;
pub const TRACE_EXTENSION: &str = "slstrace.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub format_version: u32,
    pub vocab_size: usize,
    pub k: usize,
    pub source_label: String,
    pub seed: u64,
}

impl TraceHeader {
    pub fn new(vocab_size: usize, k: usize, source_label: impl Into<String>, seed: u64) -> Self {
        TraceHeader {
            format_version: FORMAT_VERSION,
            vocab_size,
            k,
            source_label: source_label.into(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(SlsError::Validation(format!(
                "unsupported trace format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.k == 0 || self.vocab_size == 0 || self.k > self.vocab_size {
            return Err(SlsError::Validation(format!(
                "trace header k = {} must lie in 1..=vocab_size ({})",
                self.k, self.vocab_size
            )));
        }
        Ok(())
    }
}

/// One step of a trace. `values` always hold f32-representable numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub step: usize,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    pub chosen_token: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    step: usize,
    indices: Vec<usize>,
    values: Vec<f32>,
    chosen_token: Option<usize>,
}

impl TraceRecord {
    /// Builds a record from a sorted slice, quantising values to 32 bits.
    pub fn from_slice(slice: &TopKSlice, chosen_token: Option<usize>) -> Self {
        TraceRecord {
            step: slice.step,
            indices: slice.indices.clone(),
            values: slice.values.iter().map(|&v| v as f32 as f64).collect(),
            chosen_token,
        }
    }

    pub fn to_slice(&self) -> TopKSlice {
        TopKSlice {
            values: self.values.clone(),
            indices: self.indices.clone(),
            step: self.step,
        }
    }

    pub fn validate(&self, header: &TraceHeader) -> Result<()> {
        let step = self.step;
        if self.indices.len() != header.k || self.values.len() != header.k {
            return Err(SlsError::Validation(format!(
                "step {step}: expected {} indices and values, got {} and {}",
                header.k,
                self.indices.len(),
                self.values.len()
            )));
        }
        let mut seen = HashSet::with_capacity(self.indices.len());
        for &i in &self.indices {
            if i >= header.vocab_size {
                return Err(SlsError::Validation(format!(
                    "step {step}: index {i} outside vocabulary of size {}",
                    header.vocab_size
                )));
            }
            if !seen.insert(i) {
                return Err(SlsError::Validation(format!("step {step}: duplicate index {i}")));
            }
        }
        if self.values.iter().any(|v| !(*v as f32).is_finite()) {
            return Err(SlsError::Validation(format!("step {step}: non-finite value")));
        }
        if self.values.windows(2).any(|w| (w[0] as f32) < (w[1] as f32)) {
            return Err(SlsError::Validation(format!(
                "step {step}: values are not sorted non-increasing"
            )));
        }
        if let Some(c) = self.chosen_token.filter(|&c| c >= header.vocab_size) {
            return Err(SlsError::Validation(format!(
                "step {step}: chosen token {c} outside vocabulary"
            )));
        }
        Ok(())
    }

    fn to_line(&self) -> RecordLine {
        RecordLine {
            step: self.step,
            indices: self.indices.clone(),
            values: self.values.iter().map(|&v| v as f32).collect(),
            chosen_token: self.chosen_token,
        }
    }
}

fn check_order(prev: Option<usize>, record: &TraceRecord) -> Result<()> {
    match prev {
        Some(p) if record.step <= p => Err(SlsError::Validation(format!(
            "step {} follows step {p}; records must be in increasing step order",
            record.step
        ))),
        _ => Ok(()),
    }
}

/// Serialises a trace to any writer after validating every record.
pub fn write_trace_to<W: Write>(mut out: W, header: &TraceHeader, records: &[TraceRecord]) -> Result<W> {
    header.validate()?;
    let mut prev = None;
    for r in records {
        r.validate(header)?;
        check_order(prev, r)?;
        prev = Some(r.step);
    }
    let mut text = serde_json::to_string(header).expect("header serialises");
    text.push('\n');
    for r in records {
        text.push_str(&serde_json::to_string(&r.to_line()).expect("record serialises"));
        text.push('\n');
    }
    out.write_all(text.as_bytes())
        .map_err(|e| SlsError::io("<writer>", e))?;
    Ok(out)
}

pub fn write_trace(path: impl AsRef<Path>, header: &TraceHeader, records: &[TraceRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| SlsError::io(path, e))?;
    let mut w = write_trace_to(BufWriter::new(file), header, records).map_err(|e| match e {
        SlsError::Io { source, .. } => SlsError::io(path, source),
        other => other,
    })?;
    w.flush().map_err(|e| SlsError::io(path, e))
}

/// Parses and validates a trace from any buffered reader.
pub fn read_trace_from<R: BufRead>(reader: R) -> Result<(TraceHeader, Vec<TraceRecord>)> {
    let mut lines = reader.lines().enumerate();
    let (_, first) = lines.next().ok_or(SlsError::Parse {
        line: 1,
        message: "empty trace: missing header".into(),
    })?;
    let first = first.map_err(|e| SlsError::io("<reader>", e))?;
    let header: TraceHeader = serde_json::from_str(&first).map_err(|e| SlsError::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    header.validate()?;

    let mut records = Vec::new();
    let mut prev = None;
    for (n, line) in lines {
        let line = line.map_err(|e| SlsError::io("<reader>", e))?;
        let parsed: RecordLine = serde_json::from_str(&line).map_err(|e| SlsError::Parse {
            line: n + 1,
            message: e.to_string(),
        })?;
        let record = TraceRecord {
            step: parsed.step,
            indices: parsed.indices,
            values: parsed.values.into_iter().map(f64::from).collect(),
            chosen_token: parsed.chosen_token,
        };
        record.validate(&header)?;
        check_order(prev, &record)?;
        prev = Some(record.step);
        records.push(record);
    }
    Ok((header, records))
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<(TraceHeader, Vec<TraceRecord>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| SlsError::io(path, e))?;
    read_trace_from(BufReader::new(file)).map_err(|e| match e {
        SlsError::Io { source, .. } => SlsError::io(path, source),
        other => other,
    })
}
