//! Flat key-value configuration with dotted keys.
//!
//! ```text
//! alpha = 1.5
//! r1 = 0.5
//! r2 = 0.5
//! profile = compact            # or: power (with profile.beta/.a1/.a2)
//! phi = cos                    # cos|abs_clip|bump|const
//! T = 1.0
//! delta_list = 0.0625, 0.03125, 0.015625, 0.0078125
//! n_list = 4, 8, 16, 32
//! grid.h = 0.01                # optional override
//! grid.L = 12.0
//! grid.N = 4.0                 # truncation level
//! quad.middle_nodes = 256
//! quad.tail_levels = 40
//! tol.expect = 1e-9
//! tol.identity = 1e-8
//! ```

use super::phi::PhiName;
use crate::error::{Error, Result};
use crate::measure::{StableParams, TailProfile};
use crate::sublinear::QuadBudget;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidConfig(format!(
                "unknown format '{other}' (expected csv|json)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub alpha: f64,
    pub r1: f64,
    pub r2: f64,
    pub profile: TailProfile,
    pub phi: PhiName,
    pub horizon: f64,
    pub delta_list: Vec<f64>,
    pub n_list: Vec<usize>,
    pub grid_h: Option<f64>,
    pub grid_l: Option<f64>,
    pub grid_truncation: Option<f64>,
    pub quad_middle_nodes: usize,
    pub quad_tail_levels: u32,
    pub tol_expect: f64,
    pub tol_identity: f64,
    /// Seeds only the randomized property-test point sets, never the
    /// quadratures.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            alpha: 1.5,
            r1: 0.5,
            r2: 0.5,
            profile: TailProfile::Compact,
            phi: PhiName::Cos,
            horizon: 1.0,
            delta_list: vec![0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625],
            n_list: vec![4, 8, 16, 32, 64],
            grid_h: None,
            grid_l: None,
            grid_truncation: None,
            quad_middle_nodes: 256,
            quad_tail_levels: 40,
            tol_expect: 1e-9,
            tol_identity: 1e-8,
            seed: 7,
        }
    }
}

impl ExperimentConfig {
    /// Parse the flat key-value text format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Self::from_map(map)
    }

    fn from_map(map: BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut power_beta: Option<f64> = None;
        let mut power_a1 = 0.0f64;
        let mut power_a2 = 0.0f64;
        let mut profile_name = "compact".to_string();

        for (key, value) in &map {
            match key.as_str() {
                "alpha" => cfg.alpha = parse_f64(key, value)?,
                "r1" => cfg.r1 = parse_f64(key, value)?,
                "r2" => cfg.r2 = parse_f64(key, value)?,
                "profile" => profile_name = value.clone(),
                "profile.beta" => power_beta = Some(parse_f64(key, value)?),
                "profile.a1" => power_a1 = parse_f64(key, value)?,
                "profile.a2" => power_a2 = parse_f64(key, value)?,
                "phi" => cfg.phi = PhiName::parse(value)?,
                "T" => cfg.horizon = parse_f64(key, value)?,
                "delta_list" => cfg.delta_list = parse_list_f64(key, value)?,
                "n_list" => cfg.n_list = parse_list_usize(key, value)?,
                "grid.h" => cfg.grid_h = Some(parse_f64(key, value)?),
                "grid.L" => cfg.grid_l = Some(parse_f64(key, value)?),
                "grid.N" => cfg.grid_truncation = Some(parse_f64(key, value)?),
                "quad.middle_nodes" => cfg.quad_middle_nodes = parse_f64(key, value)? as usize,
                "quad.tail_levels" => cfg.quad_tail_levels = parse_f64(key, value)? as u32,
                "tol.expect" => cfg.tol_expect = parse_f64(key, value)?,
                "tol.identity" => cfg.tol_identity = parse_f64(key, value)?,
                other => {
                    return Err(Error::InvalidConfig(format!("unknown key '{other}'")));
                }
            }
        }

        cfg.profile = match profile_name.as_str() {
            "compact" => TailProfile::Compact,
            "power" => {
                let beta = power_beta.ok_or_else(|| {
                    Error::InvalidConfig("profile = power requires profile.beta".into())
                })?;
                TailProfile::PowerTail {
                    beta,
                    a1: power_a1,
                    a2: power_a2,
                }
            }
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown profile '{other}' (expected compact|power)"
                )))
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta_list.is_empty() {
            return Err(Error::InvalidConfig("delta_list is empty".into()));
        }
        for pair in self.delta_list.windows(2) {
            if !(pair[1] < pair[0]) {
                return Err(Error::InvalidConfig(
                    "delta_list must be strictly decreasing".into(),
                ));
            }
        }
        for &d in &self.delta_list {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "delta values must lie in (0, 1), got {d}"
                )));
            }
        }
        for pair in self.n_list.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(Error::InvalidConfig(
                    "n_list must be strictly increasing".into(),
                ));
            }
        }
        if self.n_list.iter().any(|&n| n == 0) {
            return Err(Error::InvalidConfig("n values must be positive".into()));
        }
        Ok(())
    }

    pub fn stable_params(&self) -> Result<StableParams> {
        StableParams::new(self.alpha, self.r1, self.r2, self.horizon)
    }

    pub fn quad_budget(&self) -> QuadBudget {
        QuadBudget {
            middle_panels: (self.quad_middle_nodes / 16).max(2),
            tail_levels: self.quad_tail_levels,
            grading_ratio: 0.5,
            tolerance: self.tol_expect,
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value.parse::<f64>().map_err(|_| {
        Error::InvalidConfig(format!("key '{key}': cannot parse '{value}' as a number"))
    })
}

fn parse_list_f64(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|v| parse_f64(key, v.trim())).collect()
}

fn parse_list_usize(key: &str, value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(|v| {
            v.trim().parse::<usize>().map_err(|_| {
                Error::InvalidConfig(format!("key '{key}': cannot parse '{v}' as an integer"))
            })
        })
        .collect()
}
