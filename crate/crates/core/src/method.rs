//! Uniform front over the sculpting transform and its baselines, plus the
//! token samplers that follow them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{entropy_minimize, temperature_scale, EmInfConfig};
use crate::config::SlsConfig;
use crate::entropy::{compute_entropy, softmax};
use crate::error::{Result, SlsError};
use crate::rng::SplitMix64;
use crate::sls::{SlsProcessor, StepDiagnostics};
use crate::topk::{logit_gap, TopKSlice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sls,
    Identity,
    Greedy,
    Temperature,
    Eminf,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Sls,
        Method::Identity,
        Method::Greedy,
        Method::Temperature,
        Method::Eminf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Sls => "sls",
            Method::Identity => "identity",
            Method::Greedy => "greedy",
            Method::Temperature => "temperature",
            Method::Eminf => "eminf",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = SlsError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                let valid: Vec<&str> = Method::ALL.iter().map(|m| m.as_str()).collect();
                SlsError::Config(format!("unknown method `{s}` (valid: {})", valid.join(", ")))
            })
    }
}

/// Everything needed to instantiate any [`Method`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSettings {
    pub sls: SlsConfig,
    pub tau: f64,
    pub eminf: EmInfConfig,
}

impl Default for MethodSettings {
    fn default() -> Self {
        MethodSettings {
            sls: SlsConfig::default(),
            tau: 0.7,
            eminf: EmInfConfig::default(),
        }
    }
}

/// Per-stream state for one method.
#[derive(Debug, Clone)]
pub enum Transform {
    Sls(Box<SlsProcessor>),
    Identity,
    Greedy,
    Temperature(f64),
    Eminf(EmInfConfig),
}

impl Transform {
    pub fn new(method: Method, settings: &MethodSettings) -> Result<Self> {
        Ok(match method {
            Method::Sls => Transform::Sls(Box::new(SlsProcessor::new(settings.sls.clone()))),
            Method::Identity => Transform::Identity,
            Method::Greedy => Transform::Greedy,
            Method::Temperature => {
                if !(settings.tau > 0.0 && settings.tau.is_finite()) {
                    return Err(SlsError::Config(format!("tau must be positive, got {}", settings.tau)));
                }
                Transform::Temperature(settings.tau)
            }
            Method::Eminf => {
                settings.eminf.validate()?;
                Transform::Eminf(settings.eminf.clone())
            }
        })
    }

    /// Greedy decoding ignores the configured sampler.
    pub fn forces_greedy(&self) -> bool {
        matches!(self, Transform::Greedy)
    }

    /// Applies the method to one slice. Non-sculpting methods report
    /// `gate_fired` when they changed the slice.
    pub fn apply(&mut self, slice: &TopKSlice, epsilon: f64) -> Result<(TopKSlice, StepDiagnostics)> {
        let adjusted = match self {
            Transform::Sls(p) => return p.step(slice),
            Transform::Identity | Transform::Greedy => slice.clone(),
            Transform::Temperature(tau) => temperature_scale(slice, *tau)?,
            Transform::Eminf(cfg) => entropy_minimize(slice, cfg)?,
        };
        let entropy_pre = compute_entropy(&slice.values, epsilon)?;
        let changed = adjusted.values != slice.values;
        let entropy_post = if changed {
            compute_entropy(&adjusted.values, epsilon)?
        } else {
            entropy_pre
        };
        let diag = StepDiagnostics {
            step: slice.step,
            entropy_pre,
            gap: logit_gap(slice),
            gate_fired: changed,
            alpha: None,
            m_eff: None,
            singular_values: None,
            entropy_post,
        };
        Ok((adjusted, diag))
    }
}

/// Token selection over a full-vocabulary logit vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    Greedy,
    /// Seeded categorical draw from the softmax of the logits.
    Sample,
}

impl Sampler {
    pub fn as_str(self) -> &'static str {
        match self {
            Sampler::Greedy => "greedy",
            Sampler::Sample => "sample",
        }
    }

    /// Picks a vocabulary id. `-inf` entries are never chosen.
    pub fn choose(self, logits: &[f64], rng: &mut SplitMix64) -> usize {
        match self {
            Sampler::Greedy => argmax(logits),
            Sampler::Sample => {
                let p = softmax(logits);
                let u = rng.next_f64();
                let mut acc = 0.0;
                let mut last = 0;
                for (i, &pi) in p.iter().enumerate() {
                    if pi > 0.0 {
                        acc += pi;
                        last = i;
                        if u < acc {
                            return i;
                        }
                    }
                }
                last
            }
        }
    }
}

impl fmt::Display for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sampler {
    type Err = SlsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Sampler::Greedy),
            "sample" => Ok(Sampler::Sample),
            other => Err(SlsError::Config(format!(
                "unknown sampler `{other}` (valid: greedy, sample)"
            ))),
        }
    }
}

/// First index of the maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
