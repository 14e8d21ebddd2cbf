//! Configuration resolution: built-in defaults, then the `--config` file, then flags.

use std::fs;
use std::path::Path;

use clap::Args;
use sls_core::{MethodSettings, SlsParams};

use crate::error::{CliError, CliResult};

/// Hyperparameter overrides shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    /// key=value file (k, window, rank, h_thres, alpha_max, gamma, s_h, s_d, h_0, d_0, epsilon, svd_tol)
    #[arg(long, value_name = "PATH")]
    pub config: Option<std::path::PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub h_thres: Option<f64>,
    #[arg(long)]
    pub alpha_max: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub s_h: Option<f64>,
    #[arg(long)]
    pub s_d: Option<f64>,
    #[arg(long = "h-0", alias = "h0", allow_hyphen_values = true)]
    pub h_0: Option<f64>,
    #[arg(long = "d-0", alias = "d0", allow_hyphen_values = true)]
    pub d_0: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub svd_tol: Option<f64>,
    /// Ablation: run the spectral adjustment on every step regardless of entropy.
    #[arg(long)]
    pub no_entropy_gate: bool,
    /// Ablation: pin the scale factor to alpha_max instead of adapting it.
    #[arg(long)]
    pub fixed_alpha: bool,
    /// Temperature for the `temperature` method.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub eminf_steps: Option<usize>,
    #[arg(long)]
    pub eminf_lr: Option<f64>,
    #[arg(long)]
    pub eminf_threshold: Option<f64>,
}

/// Resolved settings plus whether `k` was set explicitly (file or flag).
#[derive(Debug, Clone)]
pub struct Resolved {
    pub params: SlsParams,
    pub tau: f64,
    pub eminf: sls_core::EmInfConfig,
    pub k_explicit: bool,
}

impl Resolved {
    pub fn settings(&self) -> CliResult<MethodSettings> {
        Ok(MethodSettings {
            sls: self.params.clone().validate()?,
            tau: self.tau,
            eminf: self.eminf.clone(),
        })
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> CliResult<T> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("config line {line}: invalid value {value:?} for `{key}`")))
}

/// Applies a `key = value` config text on top of `resolved`.
pub fn apply_config_text(resolved: &mut Resolved, text: &str) -> CliResult<()> {
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", n + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "tau" => resolved.tau = parse(key, value, n + 1)?,
            "eminf_steps" => resolved.eminf.steps = parse(key, value, n + 1)?,
            "eminf_lr" => resolved.eminf.learning_rate = parse(key, value, n + 1)?,
            "eminf_threshold" => resolved.eminf.entropy_threshold = parse(key, value, n + 1)?,
            _ => {
                resolved
                    .params
                    .set(key, value)
                    .map_err(|e| CliError::Usage(format!("config line {}: {e}", n + 1)))?;
                if key == "k" {
                    resolved.k_explicit = true;
                }
            }
        }
    }
    Ok(())
}

impl ParamArgs {
    pub fn resolve(&self) -> CliResult<Resolved> {
        let defaults = MethodSettings::default();
        let mut r = Resolved {
            params: SlsParams::default(),
            tau: defaults.tau,
            eminf: defaults.eminf,
            k_explicit: false,
        };
        if let Some(path) = &self.config {
            let text = read_config(path)?;
            apply_config_text(&mut r, &text)?;
        }
        let p = &mut r.params;
        if let Some(k) = self.k {
            p.k = k;
            r.k_explicit = true;
        }
        macro_rules! over {
            ($($field:ident),*) => { $( if let Some(v) = self.$field { p.$field = v; } )* };
        }
        over!(window, rank, h_thres, alpha_max, gamma, s_h, s_d, h_0, d_0, epsilon, svd_tol);
        if self.no_entropy_gate {
            p.entropy_gate = false;
        }
        if self.fixed_alpha {
            p.adaptive_rescale = false;
        }
        if let Some(t) = self.tau {
            r.tau = t;
        }
        if let Some(s) = self.eminf_steps {
            r.eminf.steps = s;
        }
        if let Some(lr) = self.eminf_lr {
            r.eminf.learning_rate = lr;
        }
        if let Some(t) = self.eminf_threshold {
            r.eminf.entropy_threshold = t;
        }
        Ok(r)
    }
}

fn read_config(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))
}
