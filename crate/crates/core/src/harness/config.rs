//! Flat `key = value` experiment configuration.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::mac::Protocol;
use crate::model::{derive_k, ProtocolParams};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Shared parameters; `n_vehicles`, `w_window`, `delta_churn` and the
    /// transmission time are overridden per grid point.
    pub base: ProtocolParams,
    pub n_values: Vec<usize>,
    pub w_values: Vec<u32>,
    pub delta_values: Vec<f64>,
    /// `(t_tx seconds, K)` pairs.
    pub tx_values: Vec<(f64, u32)>,
    pub protocols: Vec<Protocol>,
    pub out_dir: PathBuf,
    pub analytics: bool,
    /// Leading cycles of every round left out of the metrics.
    pub warmup_cycles: u32,
    /// Whether collided packets contribute to the delay averages.
    pub include_collided_delays: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let base = ProtocolParams::default();
        ExperimentConfig {
            n_values: (1..=10).map(|i| i * 25).collect(),
            w_values: vec![32, 64, 128],
            delta_values: vec![0.0],
            tx_values: vec![(254e-6, 24), (332e-6, 30)],
            protocols: vec![Protocol::Cidc, Protocol::Dcf],
            out_dir: PathBuf::from("results"),
            analytics: true,
            warmup_cycles: 10,
            include_collided_delays: true,
            base,
        }
    }
}

pub const KEYS: &[&str] = &[
    "lambda",
    "t_slot_us",
    "t_difs_us",
    "m_param",
    "n_cycles",
    "n_rounds",
    "rng_seed",
    "n_values",
    "w_values",
    "delta_values",
    "t_tx_us",
    "protocols",
    "out_dir",
    "analytics",
    "warmup_cycles",
    "include_collided_delays",
];

fn list<T: std::str::FromStr>(v: &str, line: usize, key: &str) -> Result<Vec<T>> {
    let items: Vec<&str> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(Error::Config { line, msg: format!("`{key}` must not be empty") });
    }
    items
        .iter()
        .map(|s| s.parse().map_err(|_| Error::Config { line, msg: format!("`{key}`: cannot parse `{s}`") }))
        .collect()
}

fn one<T: std::str::FromStr>(v: &str, line: usize, key: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config { line, msg: format!("`{key}`: cannot parse `{v}`") })
}

fn boolean(v: &str, line: usize, key: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config { line, msg: format!("`{key}`: expected true or false, got `{v}`") }),
    }
}

/// Parses a configuration document. Lines are `key = value`; `#` starts a
/// comment; lists are comma separated. Missing keys keep their defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut t_tx_us: Option<(usize, Vec<f64>)> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::Config { line, msg: format!("expected `key = value`, got `{content}`") })?;
        let (key, value) = (key.trim(), value.trim());
        let b = &mut cfg.base;
        match key {
            "lambda" => b.lambda = one(value, line, key)?,
            "t_slot_us" => b.t_slot = one::<f64>(value, line, key)? * 1e-6,
            "t_difs_us" => b.t_difs = one::<f64>(value, line, key)? * 1e-6,
            "m_param" => b.m_param = one(value, line, key)?,
            "n_cycles" => b.n_cycles = one(value, line, key)?,
            "n_rounds" => b.n_rounds = one(value, line, key)?,
            "rng_seed" => b.rng_seed = one(value, line, key)?,
            "n_values" => cfg.n_values = list(value, line, key)?,
            "w_values" => cfg.w_values = list(value, line, key)?,
            "delta_values" => cfg.delta_values = list(value, line, key)?,
            "t_tx_us" => t_tx_us = Some((line, list(value, line, key)?)),
            "protocols" => {
                cfg.protocols = list::<String>(value, line, key)?
                    .iter()
                    .map(|s| s.parse::<Protocol>().map_err(|msg| Error::Config { line, msg }))
                    .collect::<Result<_>>()?;
                cfg.protocols.sort();
                cfg.protocols.dedup();
            }
            "out_dir" => cfg.out_dir = PathBuf::from(value),
            "analytics" => cfg.analytics = boolean(value, line, key)?,
            "warmup_cycles" => cfg.warmup_cycles = one(value, line, key)?,
            "include_collided_delays" => cfg.include_collided_delays = boolean(value, line, key)?,
            other => return Err(Error::Config { line, msg: format!("unknown key `{other}`") }),
        }
    }
    // K depends on t_slot and t_difs, which may appear after t_tx_us
    let (tx_line, tx_us) = t_tx_us.unwrap_or((0, cfg.tx_values.iter().map(|&(t, _)| t * 1e6).collect()));
    cfg.tx_values = tx_us
        .iter()
        .map(|&us| {
            let t = us * 1e-6;
            derive_k(t, cfg.base.t_difs, cfg.base.t_slot)
                .map(|k| (t, k))
                .map_err(|e| Error::Config { line: tx_line, msg: e.to_string() })
        })
        .collect::<Result<_>>()?;
    cfg.base.set_t_tx(cfg.tx_values[0].0)?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let empty = |name: &str| Error::Config { line: 0, msg: format!("`{name}` must not be empty") };
        if self.n_values.is_empty() {
            return Err(empty("n_values"));
        }
        if self.w_values.is_empty() {
            return Err(empty("w_values"));
        }
        if self.delta_values.is_empty() {
            return Err(empty("delta_values"));
        }
        if self.tx_values.is_empty() {
            return Err(empty("t_tx_us"));
        }
        if self.protocols.is_empty() {
            return Err(empty("protocols"));
        }
        if self.warmup_cycles >= self.base.n_cycles {
            return Err(Error::Config {
                line: 0,
                msg: format!("warmup_cycles ({}) must be below n_cycles ({})", self.warmup_cycles, self.base.n_cycles),
            });
        }
        for &(t, _) in &self.tx_values {
            for &n in &self.n_values {
                for &w in &self.w_values {
                    for &d in &self.delta_values {
                        let mut p = self.base.clone();
                        p.n_vehicles = n;
                        p.w_window = w;
                        p.delta_churn = d;
                        p.set_t_tx(t)?;
                        p.validate()?;
                    }
                }
            }
        }
        Ok(())
    }
}
