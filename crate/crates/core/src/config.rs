//! Hyperparameters for the sculpting transform.
//!
//! [`SlsParams`] is a plain record that can be edited freely (defaults, config
//! files, command-line overrides). [`SlsConfig`] is the validated, immutable
//! form every operation consumes; it dereferences to the parameters.

use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SlsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlsParams {
    /// Number of top logits kept per step.
    pub k: usize,
    /// Sliding buffer capacity.
    pub window: usize,
    /// Number of leading right singular vectors retained.
    pub rank: usize,
    /// Entropy gate threshold, in nats.
    pub h_thres: f64,
    pub alpha_max: f64,
    /// Damping applied to the residual (out-of-span) component.
    pub gamma: f64,
    pub s_h: f64,
    pub s_d: f64,
    pub h_0: f64,
    pub d_0: f64,
    /// Stabiliser inside `log(p + epsilon)` of the entropy.
    pub epsilon: f64,
    /// Leading singular values below this are treated as a degenerate buffer;
    /// trailing ones below `svd_tol * sigma_1` are dropped from the basis.
    pub svd_tol: f64,
    /// Ablation switch: when false, the spectral adjustment runs regardless of entropy.
    pub entropy_gate: bool,
    /// Ablation switch: when false, the scale factor is pinned to `alpha_max`.
    pub adaptive_rescale: bool,
}

impl Default for SlsParams {
    fn default() -> Self {
        SlsParams {
            k: 512,
            window: 16,
            rank: 8,
            h_thres: 0.5,
            alpha_max: 1.5,
            gamma: 0.85,
            s_h: 0.5,
            s_d: 1.0,
            h_0: 0.0,
            d_0: 2.0,
            epsilon: 1e-12,
            svd_tol: 1e-10,
            entropy_gate: true,
            adaptive_rescale: true,
        }
    }
}

/// Keys accepted by [`SlsParams::set`], in echo order.
pub const PARAM_KEYS: &[&str] = &[
    "k",
    "window",
    "rank",
    "h_thres",
    "alpha_max",
    "gamma",
    "s_h",
    "s_d",
    "h_0",
    "d_0",
    "epsilon",
    "svd_tol",
    "entropy_gate",
    "adaptive_rescale",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| SlsError::Config(format!("invalid value {value:?} for key `{key}`")))
}

impl SlsParams {
    /// Sets one parameter from its textual key and value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.trim() {
            "k" => self.k = parse_value(key, value)?,
            "window" => self.window = parse_value(key, value)?,
            "rank" => self.rank = parse_value(key, value)?,
            "h_thres" => self.h_thres = parse_value(key, value)?,
            "alpha_max" => self.alpha_max = parse_value(key, value)?,
            "gamma" => self.gamma = parse_value(key, value)?,
            "s_h" => self.s_h = parse_value(key, value)?,
            "s_d" => self.s_d = parse_value(key, value)?,
            "h_0" => self.h_0 = parse_value(key, value)?,
            "d_0" => self.d_0 = parse_value(key, value)?,
            "epsilon" => self.epsilon = parse_value(key, value)?,
            "svd_tol" => self.svd_tol = parse_value(key, value)?,
            "entropy_gate" => self.entropy_gate = parse_value(key, value)?,
            "adaptive_rescale" => self.adaptive_rescale = parse_value(key, value)?,
            other => {
                return Err(SlsError::Config(format!(
                    "unknown key `{other}` (expected one of: {})",
                    PARAM_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    pub fn validate(self) -> Result<SlsConfig> {
        SlsConfig::new(self)
    }
}

/// Validated configuration. Construct with [`SlsConfig::new`]; immutable afterwards.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SlsConfig(SlsParams);

impl SlsConfig {
    pub fn new(params: SlsParams) -> Result<Self> {
        fn check(ok: bool, what: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(SlsError::Config(what.to_string()))
            }
        }
        let p = &params;
        check(p.k >= 1, "k must be positive")?;
        check(p.window >= 1, "window must be positive")?;
        check(p.rank >= 1, "rank must be positive")?;
        check(p.h_thres.is_finite() && p.h_thres >= 0.0, "h_thres must be finite and >= 0")?;
        check(p.alpha_max.is_finite() && p.alpha_max > 1.0, "alpha_max must be finite and > 1")?;
        check(p.gamma > 0.0 && p.gamma <= 1.0, "gamma must lie in (0, 1]")?;
        check(p.s_h.is_finite() && p.s_h > 0.0, "s_h must be finite and > 0")?;
        check(p.s_d.is_finite() && p.s_d > 0.0, "s_d must be finite and > 0")?;
        check(p.h_0.is_finite(), "h_0 must be finite")?;
        check(p.d_0.is_finite(), "d_0 must be finite")?;
        check(p.epsilon.is_finite() && p.epsilon > 0.0, "epsilon must be finite and > 0")?;
        check(p.svd_tol.is_finite() && p.svd_tol > 0.0, "svd_tol must be finite and > 0")?;
        Ok(SlsConfig(params))
    }

    pub fn params(&self) -> &SlsParams {
        &self.0
    }
}

impl Deref for SlsConfig {
    type Target = SlsParams;

    fn deref(&self) -> &SlsParams {
        &self.0
    }
}

impl TryFrom<SlsParams> for SlsConfig {
    type Error = SlsError;

    fn try_from(params: SlsParams) -> Result<Self> {
        SlsConfig::new(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_constants() {
        let c = SlsConfig::default();
        assert_eq!((c.k, c.window, c.rank), (512, 16, 8));
        assert_eq!(c.h_thres, 0.5);
        assert_eq!(c.alpha_max, 1.5);
        assert_eq!(c.gamma, 0.85);
        assert_eq!(c.s_h, 0.5);
        assert_eq!(c.s_d, 1.0);
        assert_eq!(c.h_0, 0.0);
        assert_eq!(c.d_0, 2.0);
        assert!(SlsConfig::new(SlsParams::default()).is_ok());
    }

    #[test]
    fn rejects_out_of_range_values() {
        let bad = [
            SlsParams { k: 0, ..Default::default() },
            SlsParams { window: 0, ..Default::default() },
            SlsParams { rank: 0, ..Default::default() },
            SlsParams { h_thres: -0.1, ..Default::default() },
            SlsParams { alpha_max: 1.0, ..Default::default() },
            SlsParams { gamma: 0.0, ..Default::default() },
            SlsParams { gamma: 1.01, ..Default::default() },
            SlsParams { s_h: 0.0, ..Default::default() },
            SlsParams { s_d: -1.0, ..Default::default() },
            SlsParams { epsilon: 0.0, ..Default::default() },
            SlsParams { svd_tol: f64::NAN, ..Default::default() },
            SlsParams { d_0: f64::INFINITY, ..Default::default() },
        ];
        for p in bad {
            assert!(matches!(SlsConfig::new(p.clone()), Err(SlsError::Config(_))), "{p:?}");
        }
    }

    #[test]
    fn set_by_key() {
        let mut p = SlsParams::default();
        p.set("k", "32").unwrap();
        p.set("gamma", " 0.9 ").unwrap();
        p.set("entropy_gate", "false").unwrap();
        assert_eq!(p.k, 32);
        assert_eq!(p.gamma, 0.9);
        assert!(!p.entropy_gate);
        assert!(p.set("nope", "1").is_err());
        assert!(p.set("rank", "x").is_err());
    }
}
