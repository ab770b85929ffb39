//! Experiment reports with lossless JSON round-tripping and the fixed
//! CSV table layouts.

use crate::error::Result;
use crate::measure::AssumptionConstants;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub delta: f64,
    pub value: f64,
    pub error: f64,
    pub log2_delta: f64,
    pub log2_error: f64,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsRow {
    pub delta: f64,
    pub m: f64,
    pub c: f64,
    pub q: f64,
    pub i1: f64,
    pub i2: f64,
    pub i_delta: f64,
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub gamma: f64,
}

/// One audited inequality: a measured quantity against its bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub label: String,
    pub time: f64,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionRow {
    pub x: f64,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub rows: Vec<RateRow>,
    pub constants_rows: Vec<ConstantsRow>,
    pub audits: Vec<AuditRow>,
    pub solution: Vec<SolutionRow>,
    /// Least-squares slope on (log2 delta, log2 error) over all ladder
    /// points with positive error.
    pub fitted_slope: Option<f64>,
    /// Secondary fit over the finest half of the ladder.
    pub tail_slope: Option<f64>,
    pub predicted_gamma: Option<f64>,
    pub constants: Option<AssumptionConstants>,
    pub pass: BTreeMap<String, bool>,
    pub provenance: Vec<String>,
}

impl ExperimentReport {
    pub fn new(kind: &str) -> Self {
        ExperimentReport {
            kind: kind.to_string(),
            rows: Vec::new(),
            constants_rows: Vec::new(),
            audits: Vec::new(),
            solution: Vec::new(),
            fitted_slope: None,
            tail_slope: None,
            predicted_gamma: None,
            constants: None,
            pass: BTreeMap::new(),
            provenance: Vec::new(),
        }
    }

    pub fn all_passed(&self) -> bool {
        self.pass.values().all(|&b| b)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// The fixed tabular layouts. Rate-style tables use the exact column
    /// set `delta,value,error,log2_delta,log2_error,runtime_ms`; the
    /// constants table uses `delta,M,C,q,I1,I2,I_Delta,R0,R1,R2,Gamma`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if !self.rows.is_empty() || self.kind == "rate" || self.kind == "clt" {
            out.push_str("delta,value,error,log2_delta,log2_error,runtime_ms\n");
            for r in &self.rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.delta, r.value, r.error, r.log2_delta, r.log2_error, r.runtime_ms
                );
            }
        }
        if !self.constants_rows.is_empty() {
            out.push_str("delta,M,C,q,I1,I2,I_Delta,R0,R1,R2,Gamma\n");
            for r in &self.constants_rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    r.delta, r.m, r.c, r.q, r.i1, r.i2, r.i_delta, r.r0, r.r1, r.r2, r.gamma
                );
            }
        }
        if !self.audits.is_empty() {
            out.push_str("label,time,measured,bound,pass\n");
            for a in &self.audits {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    a.label, a.time, a.measured, a.bound, a.pass
                );
            }
        }
        if !self.solution.is_empty() {
            out.push_str("x,u\n");
            for s in &self.solution {
                let _ = writeln!(out, "{},{}", s.x, s.u);
            }
        }
        out
    }
}

/// Ordinary least squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        var += (x - mx) * (x - mx);
    }
    if var == 0.0 {
        None
    } else {
        Some(cov / var)
    }
}

/// Slope diagnostics of an error ladder: full fit plus a fit over the
/// finest half (pre-asymptotic pollution sits at the coarse end).
pub fn slope_fits(rows: &[RateRow]) -> (Option<f64>, Option<f64>) {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.error > 0.0 && r.error.is_finite())
        .map(|r| (r.log2_delta, r.log2_error))
        .collect();
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let full = ols_slope(&xs, &ys);
    let half = pts.len() / 2;
    let tail = ols_slope(&xs[half..], &ys[half..]);
    (full, tail)
}
