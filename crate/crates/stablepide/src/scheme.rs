//! The monotone approximation scheme: grid representation of the
//! approximate solution, the one-step operator, its truncated variant
//! and piecewise-constant-in-time evaluation.
//!
//! One step maps a grid function `v` to
//! `x_i -> max over corners of ∫ v(x_i + B z) dF(z)`, `B = delta^{1/alpha}`.
//! Because `v` is piecewise linear with constant (or periodic) extension,
//! the integral against each corner cdf is a finite combination of hat
//! integrals, and a hat integral is a second difference of the closed
//! form antiderivative of the cdf. The step is therefore evaluated
//! exactly (no quadrature error), as a convolution with nonnegative
//! weights of total mass one plus analytic boundary lumps. Monotonicity,
//! constant preservation and concavity hold at the discrete level by
//! construction.

use crate::error::{Error, Result};
use crate::measure::{DistributionSpec, StableParams};
use crate::quad;
use crate::sublinear::{Integrand, SublinearKernel};
use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// How a grid function continues beyond its node range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Extension {
    /// Constant continuation by the boundary entries (the default model).
    Constant,
    /// Linear continuation with the edge slopes; exact-integration test
    /// mode for affine data.
    Linear,
    /// Periodic wrap with period `n * h`; exact for periodic initial
    /// data such as trigonometric test functions.
    Periodic,
}

/// Spatial grid values with an extension rule; evaluation is linear
/// interpolation inside the node range.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    x0: f64,
    h: f64,
    values: Vec<f64>,
    extension: Extension,
}

impl GridFunction {
    pub fn new(x0: f64, h: f64, values: Vec<f64>, extension: Extension) -> Result<Self> {
        if !(h > 0.0) || values.len() < 2 {
            return Err(Error::InvalidParameters(
                "grid needs positive spacing and at least two nodes".into(),
            ));
        }
        Ok(GridFunction {
            x0,
            h,
            values,
            extension,
        })
    }

    pub fn sample(
        f: impl Fn(f64) -> f64,
        x0: f64,
        h: f64,
        n: usize,
        extension: Extension,
    ) -> Result<Self> {
        let values = (0..n).map(|i| f(x0 + i as f64 * h)).collect();
        GridFunction::new(x0, h, values, extension)
    }

    pub fn constant(c: f64, x0: f64, h: f64, n: usize, extension: Extension) -> Result<Self> {
        GridFunction::new(x0, h, vec![c; n], extension)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn extension(&self) -> Extension {
        self.extension
    }

    pub fn node_x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    /// Period of a periodic grid (`n * h`: node `n` wraps onto node 0).
    pub fn period(&self) -> f64 {
        self.values.len() as f64 * self.h
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Evaluate at an arbitrary point.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        match self.extension {
            Extension::Periodic => {
                let period = self.period();
                let y = (x - self.x0).rem_euclid(period);
                let j = (y / self.h).floor() as usize;
                let j = j.min(n - 1);
                let t = (y - j as f64 * self.h) / self.h;
                let next = if j + 1 == n { 0 } else { j + 1 };
                self.values[j] * (1.0 - t) + self.values[next] * t
            }
            Extension::Constant | Extension::Linear => {
                let last = self.x0 + (n - 1) as f64 * self.h;
                if x <= self.x0 {
                    match self.extension {
                        Extension::Linear => {
                            let slope = (self.values[1] - self.values[0]) / self.h;
                            self.values[0] + slope * (x - self.x0)
                        }
                        _ => self.values[0],
                    }
                } else if x >= last {
                    match self.extension {
                        Extension::Linear => {
                            let slope = (self.values[n - 1] - self.values[n - 2]) / self.h;
                            self.values[n - 1] + slope * (x - last)
                        }
                        _ => self.values[n - 1],
                    }
                } else {
                    let y = (x - self.x0) / self.h;
                    let j = (y.floor() as usize).min(n - 2);
                    let t = y - j as f64;
                    self.values[j] * (1.0 - t) + self.values[j + 1] * t
                }
            }
        }
    }

    /// Discrete Lipschitz constant: largest adjacent difference over `h`.
    pub fn lipschitz(&self) -> f64 {
        let n = self.values.len();
        let mut worst = 0.0f64;
        for i in 0..n - 1 {
            worst = worst.max((self.values[i + 1] - self.values[i]).abs());
        }
        if self.extension == Extension::Periodic {
            worst = worst.max((self.values[0] - self.values[n - 1]).abs());
        }
        worst / self.h
    }
}

/// Measured Lipschitz constant of a grid function.
pub fn lipschitz_of(v: &GridFunction) -> f64 {
    v.lipschitz()
}

/// Scheme discretization parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    /// Time step; `(0, 1]` (the closed right end serves the one-step
    /// nested-sum identity with unit horizon).
    pub delta: f64,
    /// Horizon `T`.
    pub horizon: f64,
    /// Grid spacing; must resolve the kernel scale (`h <= delta^{1/alpha}`).
    pub h: f64,
    /// Half-width of the computational domain (ignored for periodic grids).
    pub domain_half_width: f64,
    /// Clamp level for the truncated scheme.
    pub truncation: Option<f64>,
    /// Boundary model.
    pub extension: Extension,
}

impl SchemeConfig {
    /// Default resolution: the kernel scale spans four cells; domain wide
    /// enough that boundary influence at the probe window stays small.
    pub fn with_defaults(params: &StableParams, delta: f64) -> Self {
        let b = params.kernel_scale(delta);
        let quantile = (2.0 * params.r2.max(0.05) / params.alpha).powf(1.0 / params.alpha) + 1.0;
        SchemeConfig {
            delta,
            horizon: params.horizon,
            h: b / 4.0,
            domain_half_width: 8.0 * params.horizon.powf(1.0 / params.alpha) * quantile + 4.0,
            truncation: None,
            extension: Extension::Constant,
        }
    }

    /// Periodic variant for 2π-periodic initial data.
    pub fn periodic(params: &StableParams, delta: f64) -> Self {
        let mut cfg = Self::with_defaults(params, delta);
        cfg.extension = Extension::Periodic;
        cfg.domain_half_width = std::f64::consts::PI;
        cfg
    }

    pub fn validate(&self, alpha: f64) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::InvalidParameters(format!(
                "delta must lie in (0, 1], got {}",
                self.delta
            )));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidParameters("horizon must be positive".into()));
        }
        let b = self.delta.powf(1.0 / alpha);
        if !(self.h > 0.0 && self.h <= b * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameters(format!(
                "grid spacing h={} must resolve the kernel scale {b}",
                self.h
            )));
        }
        if let Some(level) = self.truncation {
            if !(level > 0.0) {
                return Err(Error::InvalidParameters(
                    "truncation level must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    /// Number of time steps, `floor(T / delta)`.
    pub fn steps(&self) -> usize {
        ((self.horizon / self.delta) + 1e-9).floor() as usize
    }
}

/// Piecewise-constant-in-time solution of the scheme.
#[derive(Debug, Clone)]
pub struct SchemeSolution {
    pub config: SchemeConfig,
    pub params: StableParams,
    /// Slices at `k * delta` for `k = 0..=steps`.
    pub slices: Vec<GridFunction>,
    pub initial_name: String,
}

impl SchemeSolution {
    /// Slice index for time `t`: constant on `[k delta, (k+1) delta ∧ T)`.
    pub fn slice_index(&self, t: f64) -> usize {
        if t < self.config.delta {
            0
        } else {
            let k = ((t / self.config.delta) + 1e-12).floor() as usize;
            k.min(self.slices.len() - 1)
        }
    }

    pub fn slice_at(&self, t: f64) -> &GridFunction {
        &self.slices[self.slice_index(t)]
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        self.slice_at(t).eval(x)
    }

    pub fn final_slice(&self) -> &GridFunction {
        self.slices.last().unwrap()
    }
}

/// `sup_x |u(t, x) - u(s, x)|` over the grid nodes.
pub fn holder_time(sol: &SchemeSolution, s: f64, t: f64) -> f64 {
    let a = sol.slice_at(s);
    let b = sol.slice_at(t);
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max)
}

// ------------------------------------------------------------------
// clamped cdf integrals
// ------------------------------------------------------------------

/// `∫_a^b F_N(s) ds` where `F_N` is the cdf of the variable clamped to
/// `[-N, N]` (`F_N = 0` below `-N`, `1` from `N` on).
fn cdf_integral_clamped(spec: &DistributionSpec, a: f64, b: f64, clamp: Option<f64>) -> f64 {
    match clamp {
        None => spec.cdf_integral_between(a, b),
        Some(level) => {
            let mut total = 0.0;
            let lo = a.max(-level);
            let hi = b.min(level);
            if hi > lo {
                total += spec.cdf_integral_between(lo, hi);
            }
            if b > level {
                total += b - level.max(a);
            }
            total
        }
    }
}

/// `∫_a^b (1 - F_N(s)) ds`.
fn survival_integral_clamped(spec: &DistributionSpec, a: f64, b: f64, clamp: Option<f64>) -> f64 {
    match clamp {
        None => spec.survival_integral_between(a, b),
        Some(level) => {
            let mut total = 0.0;
            if a < -level {
                total += b.min(-level) - a;
            }
            let lo = a.max(-level);
            let hi = b.min(level);
            if hi > lo {
                total += spec.survival_integral_between(lo, hi);
            }
            total
        }
    }
}

/// Exact hat-function weight centred at `a` with cell width `delta_z`:
/// the mass the distribution assigns to the interpolation hat. Equal to
/// a second difference of the cdf antiderivative; evaluated through
/// survival integrals on the right half-line to avoid cancellation.
fn hat_weight(spec: &DistributionSpec, clamp: Option<f64>, a: f64, delta_z: f64) -> f64 {
    let w = if a - delta_z >= 0.0 {
        (survival_integral_clamped(spec, a - delta_z, a, clamp)
            - survival_integral_clamped(spec, a, a + delta_z, clamp))
            / delta_z
    } else {
        (cdf_integral_clamped(spec, a, a + delta_z, clamp)
            - cdf_integral_clamped(spec, a - delta_z, a, clamp))
            / delta_z
    };
    w.max(0.0)
}

/// `Σ_{m: m delta_z <= a} w_m`: cumulative hat mass, as a cell mean of
/// the cdf.
fn cum_hats_below(spec: &DistributionSpec, clamp: Option<f64>, a: f64, delta_z: f64) -> f64 {
    cdf_integral_clamped(spec, a, a + delta_z, clamp) / delta_z
}

/// `Σ_{m: m delta_z >= a} w_m`.
fn cum_hats_above(spec: &DistributionSpec, clamp: Option<f64>, a: f64, delta_z: f64) -> f64 {
    survival_integral_clamped(spec, a - delta_z, a, clamp) / delta_z
}

// ------------------------------------------------------------------
// the one-step operator
// ------------------------------------------------------------------

const DIRECT_LIMIT: usize = 1200;

struct CornerTable {
    /// Constant/linear extension: weights for offsets `-(n-1)..=(n-1)`
    /// stored at index `m + n - 1`. Periodic: reversed wrapped weights.
    weights: Vec<f64>,
    /// Per-node cumulative mass escaping the grid on each side
    /// (constant/linear extension only).
    cum_left: Vec<f64>,
    cum_right: Vec<f64>,
    spectrum: Vec<Complex<f64>>,
}

/// Cached one-step operator for a fixed kernel, grid layout, time step
/// and optional clamp level.
pub struct StepOperator {
    x0: f64,
    h: f64,
    n: usize,
    extension: Extension,
    b_scale: f64,
    corners: Vec<CornerTable>,
    corner_specs: Vec<DistributionSpec>,
    fft: Option<FftBundle>,
}

struct FftBundle {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl StepOperator {
    pub fn new(
        kernel: &SublinearKernel,
        template: &GridFunction,
        delta: f64,
        clamp: Option<f64>,
        steps_hint: usize,
    ) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidParameters(format!(
                "delta must lie in (0, 1], got {delta}"
            )));
        }
        if template.extension() == Extension::Linear && clamp.is_some() {
            return Err(Error::InvalidParameters(
                "linear extension is an exact-integration test mode; clamping is not supported there"
                    .into(),
            ));
        }
        let b_scale = delta.powf(1.0 / kernel.alpha());
        let n = template.len();
        let delta_z = template.h() / b_scale;
        let extension = template.extension();

        let use_fft = n > DIRECT_LIMIT;
        let fft = if use_fft {
            let size = match extension {
                Extension::Periodic => n,
                _ => quad::next_fast_size(3 * n - 2),
            };
            let mut planner = FftPlanner::new();
            Some(FftBundle {
                size,
                forward: planner.plan_fft_forward(size),
                inverse: planner.plan_fft_inverse(size),
            })
        } else {
            None
        };

        let mut corners = Vec::new();
        for spec in kernel.corners() {
            let table = match extension {
                Extension::Periodic => {
                    build_periodic_table(spec, clamp, n, delta_z, steps_hint, fft.as_ref())
                }
                Extension::Constant | Extension::Linear => {
                    build_line_table(spec, clamp, n, delta_z, fft.as_ref())
                }
            };
            corners.push(table);
        }

        Ok(StepOperator {
            x0: template.x0(),
            h: template.h(),
            n,
            extension,
            b_scale,
            corners,
            corner_specs: kernel.corners().to_vec(),
            fft,
        })
    }

    /// Apply one step: node `i` receives the maximum over corners of the
    /// exact integral of the interpolated `v` against the (possibly
    /// clamped) shifted distribution.
    pub fn apply(&mut self, v: &GridFunction) -> GridFunction {
        assert_eq!(v.len(), self.n, "grid layout changed between steps");
        assert_eq!(v.extension(), self.extension);
        let n = self.n;
        let reference = v.min_value();
        let g: Vec<f64> = v.values().iter().map(|x| x - reference).collect();
        let mut out = vec![f64::NEG_INFINITY; n];

        for (ci, table) in self.corners.iter().enumerate() {
            let core = self.corner_core(table, &g);
            match self.extension {
                Extension::Periodic => {
                    for i in 0..n {
                        out[i] = out[i].max(core[i]);
                    }
                }
                Extension::Constant => {
                    let g0 = g[0];
                    let gl = g[n - 1];
                    for i in 0..n {
                        let val = core[i] + table.cum_left[i] * g0 + table.cum_right[i] * gl;
                        out[i] = out[i].max(val);
                    }
                }
                Extension::Linear => {
                    // Constant-extension lumps plus pure slope corrections:
                    // the linear extension equals the constant one plus
                    // slope * (y - boundary) outside the node range.
                    let spec = &self.corner_specs[ci];
                    let slope_l = (g[1] - g[0]) / self.h;
                    let slope_r = (g[n - 1] - g[n - 2]) / self.h;
                    let delta_z = self.h / self.b_scale;
                    let g0 = g[0];
                    let gl = g[n - 1];
                    for i in 0..n {
                        let zl = -(i as f64) * delta_z;
                        let zr = (n - 1 - i) as f64 * delta_z;
                        let mass_l = spec.cdf(zl);
                        let mass_r = 1.0 - spec.cdf(zr);
                        let mom_l = spec.moment_between(f64::NEG_INFINITY, zl);
                        let mom_r = -spec.moment_between(f64::NEG_INFINITY, zr);
                        let val = core[i]
                            + table.cum_left[i] * g0
                            + table.cum_right[i] * gl
                            + slope_l * self.b_scale * (mom_l - zl * mass_l)
                            + slope_r * self.b_scale * (mom_r - zr * mass_r);
                        out[i] = out[i].max(val);
                    }
                }
            }
        }

        let values: Vec<f64> = out.into_iter().map(|x| reference + x).collect();
        GridFunction {
            x0: self.x0,
            h: self.h,
            values,
            extension: self.extension,
        }
    }

    fn corner_core(&self, table: &CornerTable, g: &[f64]) -> Vec<f64> {
        let n = self.n;
        match (&self.fft, self.extension) {
            (None, Extension::Periodic) => (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut acc = 0.0;
                    // weights stored reversed: table.weights[s] multiplies
                    // g[(i - s) mod n] -- equivalently offset m = -s.
                    for (s, w) in table.weights.iter().enumerate() {
                        let j = (i + n - s % n) % n;
                        acc += w * g[j];
                    }
                    acc
                })
                .collect(),
            (None, _) => (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut acc = 0.0;
                    let base = n - 1 - i;
                    for (j, gj) in g.iter().enumerate() {
                        acc += table.weights[base + j] * gj;
                    }
                    acc
                })
                .collect(),
            (Some(bundle), ext) => {
                let size = bundle.size;
                let mut buf = vec![Complex::new(0.0, 0.0); size];
                for (j, gj) in g.iter().enumerate() {
                    buf[j] = Complex::new(*gj, 0.0);
                }
                bundle.forward.process(&mut buf);
                for (b, k) in buf.iter_mut().zip(&table.spectrum) {
                    *b *= *k;
                }
                bundle.inverse.process(&mut buf);
                let scale = 1.0 / size as f64;
                match ext {
                    Extension::Periodic => (0..n).map(|i| buf[i].re * scale).collect(),
                    _ => (0..n).map(|i| buf[n - 1 + i].re * scale).collect(),
                }
            }
        }
    }

    pub fn b_scale(&self) -> f64 {
        self.b_scale
    }
}

fn build_line_table(
    spec: &DistributionSpec,
    clamp: Option<f64>,
    n: usize,
    delta_z: f64,
    fft: Option<&FftBundle>,
) -> CornerTable {
    let mut weights = vec![0.0; 2 * n - 1];
    weights.par_iter_mut().enumerate().for_each(|(k, w)| {
        let m = k as isize - (n as isize - 1);
        *w = hat_weight(spec, clamp, m as f64 * delta_z, delta_z);
    });
    let mut cum_left = vec![0.0; n];
    let mut cum_right = vec![0.0; n];
    for i in 0..n {
        cum_left[i] = cum_hats_below(spec, clamp, -(i as f64 + 1.0) * delta_z, delta_z);
        cum_right[i] = cum_hats_above(spec, clamp, (n - i) as f64 * delta_z, delta_z);
    }
    let spectrum = match fft {
        None => Vec::new(),
        Some(bundle) => {
            // Convolution kernel is the reversed weight sequence.
            let mut buf = vec![Complex::new(0.0, 0.0); bundle.size];
            for (k, w) in weights.iter().enumerate() {
                buf[2 * n - 2 - k] = Complex::new(*w, 0.0);
            }
            bundle.forward.process(&mut buf);
            buf
        }
    };
    CornerTable {
        weights,
        cum_left,
        cum_right,
        spectrum,
    }
}

fn build_periodic_table(
    spec: &DistributionSpec,
    clamp: Option<f64>,
    period_cells: usize,
    delta_z: f64,
    steps_hint: usize,
    fft: Option<&FftBundle>,
) -> CornerTable {
    let p = period_cells;
    let period_z = p as f64 * delta_z;
    let mut wrapped = vec![0.0f64; p];

    // Finite support when clamped: no wrap bookkeeping needed beyond it.
    let reach_cells = match clamp {
        Some(level) => (level / delta_z).ceil() as usize + 2,
        None => usize::MAX,
    };

    // Pick how many whole periods to accumulate exactly; the rest is
    // allocated by the shape of the next period, with error
    // rem * O(1/p_max) per step.
    let steps = steps_hint.max(1) as f64;
    let mut p_max = 8usize;
    while p_max < 512 {
        let far = p_max as f64 * period_z;
        let rem =
            cum_hats_above(spec, clamp, far, delta_z) + cum_hats_below(spec, clamp, -far, delta_z);
        if rem * 2.2 / p_max as f64 * steps <= 1e-8 {
            break;
        }
        p_max *= 2;
    }
    let m_far_cells = match clamp {
        Some(_) => reach_cells.min(p_max * p),
        None => p_max * p,
    };

    // Residue s collects the offsets m = -s + j p; each residue sums its
    // own images in a fixed order, so the result is deterministic under
    // any thread count.
    wrapped.par_iter_mut().enumerate().for_each(|(s, slot)| {
        let mut acc = 0.0;
        let mut m = -(s as isize);
        while m >= -(m_far_cells as isize) {
            m -= p as isize;
        }
        m += p as isize;
        while m <= m_far_cells as isize {
            acc += hat_weight(spec, clamp, m as f64 * delta_z, delta_z);
            m += p as isize;
        }
        *slot = acc;
    });

    if clamp.is_none() {
        // Allocate the tail mass beyond the accumulated periods using the
        // shape of the next period on each side.
        let rem_right = cum_hats_above(spec, clamp, (m_far_cells as f64 + 1.0) * delta_z, delta_z);
        let rem_left = cum_hats_below(spec, clamp, -(m_far_cells as f64 + 1.0) * delta_z, delta_z);
        for (rem, sign) in [(rem_right, 1.0f64), (rem_left, -1.0f64)] {
            if rem <= 0.0 {
                continue;
            }
            let mut shape = vec![0.0f64; p];
            let mut total = 0.0;
            for r in 0..p {
                let m = sign * (m_far_cells as f64 + 1.0 + r as f64);
                let w = hat_weight(spec, clamp, m * delta_z, delta_z);
                shape[r] = w;
                total += w;
            }
            if total > 0.0 {
                for r in 0..p {
                    let m = sign as isize * (m_far_cells as isize + 1 + r as isize);
                    let s = (((-m) % p as isize + p as isize) % p as isize) as usize;
                    wrapped[s] += rem * shape[r] / total;
                }
            } else {
                // Degenerate: dump uniformly.
                for w in wrapped.iter_mut() {
                    *w += rem / p as f64;
                }
            }
        }
    }

    let spectrum = match fft {
        None => Vec::new(),
        Some(bundle) => {
            let mut buf: Vec<Complex<f64>> =
                wrapped.iter().map(|w| Complex::new(*w, 0.0)).collect();
            bundle.forward.process(&mut buf);
            buf
        }
    };
    CornerTable {
        weights: wrapped,
        cum_left: Vec::new(),
        cum_right: Vec::new(),
        spectrum,
    }
}

fn cdf_clamped(spec: &DistributionSpec, z: f64, clamp: Option<f64>) -> f64 {
    match clamp {
        None => spec.cdf(z),
        Some(level) => {
            if z < -level {
                0.0
            } else if z >= level {
                1.0
            } else {
                spec.cdf(z)
            }
        }
    }
}

/// One application of the scheme operator.
pub fn step(kernel: &SublinearKernel, v: &GridFunction, delta: f64) -> Result<GridFunction> {
    let mut op = StepOperator::new(kernel, v, delta, None, 1)?;
    Ok(op.apply(v))
}

/// One application of the truncated operator at clamp level `level`.
pub fn step_truncated(
    kernel: &SublinearKernel,
    v: &GridFunction,
    delta: f64,
    level: f64,
) -> Result<GridFunction> {
    let mut op = StepOperator::new(kernel, v, delta, Some(level), 1)?;
    Ok(op.apply(v))
}

fn build_grid(
    kernel: &SublinearKernel,
    phi: &Integrand,
    config: &SchemeConfig,
) -> Result<GridFunction> {
    config.validate(kernel.alpha())?;
    match config.extension {
        Extension::Periodic => {
            let period = 2.0 * std::f64::consts::PI;
            let mut cells = (period / config.h).ceil() as usize;
            cells = quad::next_fast_size(cells.max(16));
            if cells % 2 == 1 {
                cells = quad::next_fast_size(cells + 1);
            }
            let h = period / cells as f64;
            GridFunction::sample(
                |x| phi.eval(x),
                -std::f64::consts::PI,
                h,
                cells,
                Extension::Periodic,
            )
        }
        ext => {
            let half_cells = (config.domain_half_width / config.h).ceil() as usize;
            let n = 2 * half_cells + 1;
            GridFunction::sample(
                |x| phi.eval(x),
                -(half_cells as f64) * config.h,
                config.h,
                n,
                ext,
            )
        }
    }
}

fn solve_impl(
    kernel: &SublinearKernel,
    phi: &Integrand,
    config: &SchemeConfig,
    clamp: Option<f64>,
    keep_history: bool,
    initial_name: &str,
) -> Result<SchemeSolution> {
    let grid = build_grid(kernel, phi, config)?;
    let steps = config.steps();
    let mut op = StepOperator::new(kernel, &grid, config.delta, clamp, steps)?;
    let mut slices = Vec::with_capacity(if keep_history { steps + 1 } else { 2 });
    slices.push(grid);
    for _ in 0..steps {
        let next = op.apply(slices.last().unwrap());
        if keep_history {
            slices.push(next);
        } else {
            *slices.last_mut().unwrap() = next;
        }
    }
    Ok(SchemeSolution {
        config: *config,
        params: *kernel.params(),
        slices,
        initial_name: initial_name.to_string(),
    })
}

/// Run the scheme from the sampled initial datum; the full time history
/// is retained.
pub fn solve(
    kernel: &SublinearKernel,
    phi: &Integrand,
    config: &SchemeConfig,
) -> Result<SchemeSolution> {
    if config.truncation.is_some() {
        return Err(Error::InvalidParameters(
            "plain solve expects truncation = None; use solve_truncated".into(),
        ));
    }
    solve_impl(kernel, phi, config, None, true, "phi")
}

/// Run the truncated scheme (clamped increments).
pub fn solve_truncated(
    kernel: &SublinearKernel,
    phi: &Integrand,
    config: &SchemeConfig,
) -> Result<SchemeSolution> {
    let level = config.truncation.ok_or_else(|| {
        Error::InvalidParameters("solve_truncated requires a truncation level".into())
    })?;
    solve_impl(kernel, phi, config, Some(level), true, "phi")
}

/// Memory-light solve keeping only the final slice.
pub fn solve_final(
    kernel: &SublinearKernel,
    phi: &Integrand,
    config: &SchemeConfig,
) -> Result<GridFunction> {
    let sol = solve_impl(kernel, phi, config, config.truncation, false, "phi")?;
    Ok(sol.slices.into_iter().next_back().unwrap())
}

/// Exact single-point evaluation of `E[v(x + b ξ)]` (or its clamped
/// variant) for one corner: the interpolated `v` is integrated interval
/// by interval against closed-form masses and first moments.
fn corner_expect_shifted(
    spec: &DistributionSpec,
    v: &GridFunction,
    b_scale: f64,
    x: f64,
    clamp: Option<f64>,
) -> f64 {
    debug_assert!(v.extension() != Extension::Periodic);
    let n = v.len();
    let reference = v.values()[0];
    // The continuous part of the clamped law is plain dF restricted to
    // (-N, N); the outer mass sits in two atoms handled at the end.
    let (lo_z, hi_z) = match clamp {
        Some(level) => (-level, level),
        None => (f64::NEG_INFINITY, f64::INFINITY),
    };
    let mut total = 0.0;

    let z_of = |j: usize| (v.node_x(j) - x) / b_scale;
    let z_first = z_of(0);
    let z_last = z_of(n - 1);

    // Left extension: v on (-inf, z_first), restricted to (lo_z, hi_z).
    {
        let hi = z_first.min(hi_z);
        if hi > lo_z {
            let mass = spec.mass_between(lo_z.max(-f64::MAX), hi);
            match v.extension() {
                Extension::Linear => {
                    let slope = (v.values()[1] - v.values()[0]) / v.h();
                    let mom = spec.moment_between(lo_z.max(-f64::MAX), hi);
                    total += (v.values()[0] - reference) * mass
                        + slope * b_scale * (mom - z_first * mass);
                }
                _ => total += (v.values()[0] - reference) * mass,
            }
        }
    }
    // Interior intervals, clipped to the continuous range.
    for j in 0..n - 1 {
        let (za, zb) = (z_of(j), z_of(j + 1));
        let (ca, cb) = (za.max(lo_z), zb.min(hi_z));
        if cb <= ca {
            continue;
        }
        let mass = spec.mass_between(ca, cb);
        let mom = spec.moment_between(ca, cb);
        let slope = (v.values()[j + 1] - v.values()[j]) / (zb - za);
        let base = v.values()[j] - reference;
        total += base * mass + slope * (mom - za * mass);
    }
    // Right extension.
    {
        let lo = z_last.max(lo_z);
        if hi_z > lo {
            let mass = spec.mass_between(lo, hi_z.min(f64::MAX));
            match v.extension() {
                Extension::Linear => {
                    let slope = (v.values()[n - 1] - v.values()[n - 2]) / v.h();
                    let mom = spec.moment_between(lo, hi_z.min(f64::MAX));
                    total += (v.values()[n - 1] - reference) * mass
                        + slope * b_scale * (mom - z_last * mass);
                }
                _ => total += (v.values()[n - 1] - reference) * mass,
            }
        }
    }
    // Clamp atoms.
    if let Some(level) = clamp {
        total += (v.eval(x - b_scale * level) - reference) * spec.cdf(-level);
        total += (v.eval(x + b_scale * level) - reference) * (1.0 - spec.cdf(level));
    }
    reference + total
}

fn mass_clamped(spec: &DistributionSpec, a: f64, b: f64, clamp: Option<f64>) -> f64 {
    match clamp {
        None => spec.mass_between(a, b),
        Some(level) => {
            let lo = a.max(-level);
            let hi = b.min(level);
            if hi <= lo {
                0.0
            } else {
                spec.mass_between(lo, hi)
            }
        }
    }
}

fn moment_between_clamped(spec: &DistributionSpec, a: f64, b: f64, clamp: Option<f64>) -> f64 {
    match clamp {
        None => spec.moment_between(a, b),
        Some(level) => {
            let lo = a.max(-level);
            let hi = b.min(level);
            if hi <= lo {
                0.0
            } else {
                spec.moment_between(lo, hi)
            }
        }
    }
}

/// `Ẽ[v(x + delta^{1/alpha} ξ)]` for a grid function `v` and arbitrary
/// `x`: maximum over corners of the exact per-corner integrals.
pub fn expect_shifted(
    kernel: &SublinearKernel,
    v: &GridFunction,
    b_scale: f64,
    x: f64,
    clamp: Option<f64>,
) -> f64 {
    match v.extension() {
        Extension::Periodic => expect_shifted_periodic(kernel, v, b_scale, x, clamp),
        _ => kernel.max_over_corners(|spec| corner_expect_shifted(spec, v, b_scale, x, clamp)),
    }
}

/// Periodic point evaluation: folds the integral period by period,
/// charging the (tiny) remainder to the period-averaged value.
fn expect_shifted_periodic(
    kernel: &SublinearKernel,
    v: &GridFunction,
    b_scale: f64,
    x: f64,
    clamp: Option<f64>,
) -> f64 {
    let period_z = v.period() / b_scale;
    kernel.max_over_corners(|spec| {
        let mean = v.values().iter().sum::<f64>() / v.len() as f64;
        let mut p_max = 8usize;
        loop {
            let far = (p_max as f64 + 0.5) * period_z;
            let rem = 1.0 - (cdf_clamped(spec, far, clamp) - cdf_clamped(spec, -far, clamp));
            if rem * 2.2 / p_max as f64 <= 1e-11 || p_max >= 4096 {
                break;
            }
            p_max *= 2;
        }
        let far = (p_max as f64 + 0.5) * period_z;
        let mut total = 0.0;
        // Piecewise-linear sweep across all breakpoints within +-far.
        let h_z = v.h() / b_scale;
        let n = v.len();
        let j_lo = ((-far - (v.x0() - x) / b_scale) / h_z).floor() as i64;
        let j_hi = ((far - (v.x0() - x) / b_scale) / h_z).ceil() as i64;
        for j in j_lo..j_hi {
            let za = (v.x0() - x) / b_scale + j as f64 * h_z;
            let zb = za + h_z;
            let idx = j.rem_euclid(n as i64) as usize;
            let next = (idx + 1) % n;
            let mass = mass_clamped(spec, za, zb, clamp);
            if mass == 0.0 {
                continue;
            }
            let mom = moment_between_clamped(spec, za, zb, clamp);
            let slope = (v.values()[next] - v.values()[idx]) / h_z;
            total += v.values()[idx] * mass + slope * (mom - za * mass);
        }
        if let Some(level) = clamp {
            total += v.eval(x - b_scale * level) * spec.cdf(-level);
            total += v.eval(x + b_scale * level) * (1.0 - spec.cdf(level));
        }
        let rem = 1.0 - (cdf_clamped(spec, far, clamp) - cdf_clamped(spec, -far, clamp));
        total + rem * mean
    })
}

/// The rewritten scheme operator
/// `S(delta, x, p, v) = (p - Ẽ[v(x + delta^{1/alpha} ξ)]) / delta`.
pub fn scheme_operator_s(
    kernel: &SublinearKernel,
    delta: f64,
    x: f64,
    p: f64,
    v: &GridFunction,
) -> f64 {
    let b = delta.powf(1.0 / kernel.alpha());
    (p - expect_shifted(kernel, v, b, x, None)) / delta
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn evaluation_stays_between_neighbouring_nodes(seed in 0u64..64, q in 0.0f64..1.0) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(4..40);
            let h = rng.gen_range(0.01..0.5);
            let x0 = rng.gen_range(-3.0..3.0);
            let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            for ext in [Extension::Constant, Extension::Linear, Extension::Periodic] {
                let grid = GridFunction::new(x0, h, values.clone(), ext).unwrap();
                // Interior interpolation stays inside the node bracket and
                // hits nodes exactly.
                let j = rng.gen_range(0..n - 1);
                let x = grid.node_x(j) + q * h;
                let v = grid.eval(x);
                // Node coordinates reconstructed through x0 + j h carry a
                // rounding ulp, so the bracket takes both neighbours.
                let lo = grid.values()[j.saturating_sub(1)..(j + 2).min(n)]
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min);
                let hi = grid.values()[j.saturating_sub(1)..(j + 2).min(n)]
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
                let at_node = grid.eval(grid.node_x(j));
                prop_assert!((at_node - grid.values()[j]).abs() < 1e-9);
                if ext == Extension::Periodic {
                    let period = grid.period();
                    prop_assert!((grid.eval(x + 3.0 * period) - v).abs() < 1e-9);
                }
            }
        }
    }

    use crate::measure::TailProfile;
    use crate::sublinear::QuadBudget;
    use approx::assert_abs_diff_eq;

    fn singleton_kernel(alpha: f64) -> SublinearKernel {
        let params = StableParams::new(alpha, 0.5, 0.5, 1.0).unwrap();
        SublinearKernel::new(params, TailProfile::Compact, QuadBudget::default()).unwrap()
    }

    fn four_corner_kernel() -> SublinearKernel {
        let params = StableParams::new(1.5, 0.38, 0.42, 1.0).unwrap();
        SublinearKernel::new(params, TailProfile::Compact, QuadBudget::default()).unwrap()
    }

    #[test]
    fn constants_are_preserved_bitwise() {
        let kernel = four_corner_kernel();
        for ext in [Extension::Constant, Extension::Periodic, Extension::Linear] {
            let v = GridFunction::constant(5.0, -3.0, 0.05, 120, ext).unwrap();
            let out = step(&kernel, &v, 0.125).unwrap();
            assert_eq!(out.values(), v.values());
            if ext != Extension::Linear {
                let out = step_truncated(&kernel, &v, 0.125, 2.0).unwrap();
                assert_eq!(out.values(), v.values());
            }
        }
        // FFT path
        let v = GridFunction::constant(-2.5, -8.0, 0.004, 4001, Extension::Constant).unwrap();
        let out = step(&kernel, &v, 2.0f64.powi(-9)).unwrap();
        assert_eq!(out.values(), v.values());
    }

    #[test]
    fn affine_data_is_reproduced_in_exact_linear_mode() {
        let kernel = four_corner_kernel();
        let delta = 0.125;
        let v =
            GridFunction::sample(|x| 2.0 - 0.7 * x, -20.0, 0.05, 801, Extension::Linear).unwrap();
        let out = step(&kernel, &v, delta).unwrap();
        for i in 0..v.len() {
            assert_abs_diff_eq!(out.values()[i], v.values()[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn weights_sum_to_one_with_lumps() {
        let kernel = four_corner_kernel();
        let delta = 0.25f64;
        let b = delta.powf(1.0 / 1.5);
        let v = GridFunction::constant(0.0, -4.0, b / 4.0, 161, Extension::Constant).unwrap();
        let op = StepOperator::new(&kernel, &v, delta, None, 1).unwrap();
        for table in &op.corners {
            let n = v.len();
            for i in [0usize, n / 2, n - 1] {
                let mut total = table.cum_left[i] + table.cum_right[i];
                for j in 0..n {
                    total += table.weights[n - 1 - i + j];
                }
                assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn one_step_matches_independent_quadrature_oracle() {
        // v = cos clipped outside [-40, 40]; the oracle integrates the
        // clipped integrand with a doubled quadrature budget, no grid.
        let kernel = singleton_kernel(1.5);
        let delta = 2.0f64.powi(-6);
        let b = delta.powf(1.0 / 1.5);
        let h = b / 256.0;
        let half = (40.0 / h).ceil() as usize;
        let v = GridFunction::sample(
            |x| x.clamp(-40.0, 40.0).cos(),
            -(half as f64) * h,
            h,
            2 * half + 1,
            Extension::Constant,
        )
        .unwrap();
        let grid_value = expect_shifted(&kernel, &v, b, 0.0, None);

        let oracle_params = StableParams::new(1.5, 0.5, 0.5, 1.0).unwrap();
        let oracle_budget = QuadBudget {
            middle_panels: 32,
            tail_levels: 48,
            ..QuadBudget::default()
        };
        let oracle_kernel =
            SublinearKernel::new(oracle_params, TailProfile::Compact, oracle_budget).unwrap();
        let clip = 40.0;
        let f = Integrand::new(move |z: f64| (b * z).clamp(-clip, clip).cos())
            .with_breakpoints(&[-clip / b, clip / b]);
        let oracle = oracle_kernel.expect(&f).unwrap();
        assert_abs_diff_eq!(grid_value, oracle, epsilon = 1e-7);
    }

    #[test]
    fn monotonicity_is_exact_for_ordered_data() {
        use rand::{Rng, SeedableRng};
        let kernel = four_corner_kernel();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let delta = 0.2f64;
        let b = delta.powf(1.0 / 1.5);
        for _ in 0..20 {
            let n = 160;
            let lower: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let upper: Vec<f64> = lower.iter().map(|v| v + rng.gen_range(0.0..0.5)).collect();
            let vl = GridFunction::new(-2.0, b / 4.0, lower, Extension::Constant).unwrap();
            let vu = GridFunction::new(-2.0, b / 4.0, upper, Extension::Constant).unwrap();
            let sl = step(&kernel, &vl, delta).unwrap();
            let su = step(&kernel, &vu, delta).unwrap();
            for i in 0..n {
                assert!(sl.values()[i] <= su.values()[i] + 1e-12);
            }
        }
    }

    #[test]
    fn translation_equivariance_is_exact_on_periodic_grids() {
        let kernel = four_corner_kernel();
        let delta = 0.25;
        let n = 256;
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let phi = |x: f64| x.cos() + 0.3 * (2.0 * x).sin();
        let v =
            GridFunction::sample(phi, -std::f64::consts::PI, h, n, Extension::Periodic).unwrap();
        let shift = 7usize;
        let shifted: Vec<f64> = (0..n).map(|i| v.values()[(i + shift) % n]).collect();
        let vs = GridFunction::new(v.x0(), h, shifted, Extension::Periodic).unwrap();
        let out = step(&kernel, &v, delta).unwrap();
        let outs = step(&kernel, &vs, delta).unwrap();
        for i in 0..n {
            assert_eq!(outs.values()[i], out.values()[(i + shift) % n]);
        }
    }

    #[test]
    fn scheme_operator_examples() {
        let kernel = singleton_kernel(1.5);
        let v = GridFunction::constant(0.0, -10.0, 0.05, 401, Extension::Constant).unwrap();
        assert_abs_diff_eq!(
            scheme_operator_s(&kernel, 0.5, 0.0, 1.0, &v),
            2.0,
            epsilon = 1e-12
        );
        // p equal to the expectation gives zero.
        let w = GridFunction::sample(|x| (x * 0.3).tanh(), -10.0, 0.05, 401, Extension::Constant)
            .unwrap();
        let b = 0.5f64.powf(1.0 / 1.5);
        let e = expect_shifted(&kernel, &w, b, 0.4, None);
        assert_abs_diff_eq!(
            scheme_operator_s(&kernel, 0.5, 0.4, e, &w),
            0.0,
            epsilon = 1e-12
        );
        // Cash translation: S(p + c1, v + c2) = S(p, v) + (c1 - c2)/delta.
        let shifted = GridFunction::new(
            w.x0(),
            w.h(),
            w.values().iter().map(|v| v + 0.7).collect(),
            Extension::Constant,
        )
        .unwrap();
        let s0 = scheme_operator_s(&kernel, 0.5, 0.4, e, &w);
        let s1 = scheme_operator_s(&kernel, 0.5, 0.4, e + 0.3, &shifted);
        assert_abs_diff_eq!(s1, s0 + (0.3 - 0.7) / 0.5, epsilon = 1e-10);
    }

    #[test]
    fn degenerate_horizon_returns_initial_datum() {
        let kernel = singleton_kernel(1.5);
        let params = kernel.params();
        let mut config = SchemeConfig::with_defaults(params, 0.5);
        config.horizon = 0.25; // T < delta
        let phi = Integrand::new(|x: f64| x.abs().min(2.0));
        let sol = solve(&kernel, &phi, &config).unwrap();
        assert_eq!(sol.slices.len(), 1);
        assert_eq!(sol.config.steps(), 0);
    }

    #[test]
    fn semigroup_property_is_exact() {
        let kernel = four_corner_kernel();
        let params = kernel.params();
        let delta = 0.125;
        let mut config = SchemeConfig::with_defaults(params, delta);
        config.horizon = 1.0;
        config.domain_half_width = 6.0;
        let phi = Integrand::new(|x: f64| x.abs().min(2.0));
        let sol = solve(&kernel, &phi, &config).unwrap();
        // Restart from the slice at t = 0.5 and advance to t = 1.
        let mid = sol.slice_at(0.5).clone();
        let mut op = StepOperator::new(&kernel, &mid, delta, None, 4).unwrap();
        let mut v = mid;
        for _ in 0..4 {
            v = op.apply(&v);
        }
        assert_eq!(v.values(), sol.final_slice().values());
    }

    #[test]
    fn truncated_step_single_application_matches_clamped_expectation() {
        let kernel = singleton_kernel(1.5);
        let delta = 0.25f64;
        let b = delta.powf(1.0 / 1.5);
        let h = b / 64.0;
        let half = (30.0 / h).ceil() as usize;
        let v = GridFunction::sample(
            |x| x.abs().min(25.0),
            -(half as f64) * h,
            h,
            2 * half + 1,
            Extension::Constant,
        )
        .unwrap();
        let value = expect_shifted(&kernel, &v, b, 0.0, Some(1.0));
        let f = Integrand::new(move |z: f64| (b * z).abs().min(25.0));
        let oracle = kernel.expect_clamped(&f, 1.0).unwrap();
        assert_abs_diff_eq!(value, oracle, epsilon = 1e-9);
    }

    #[test]
    fn translation_equivariance_with_constant_extension_vs_influence_bound() {
        // With constant extension and exact heavy-tailed weights a fixed
        // 1e-10 is unattainable at practical domain sizes; the shift
        // mismatch at interior nodes is instead bounded by the boundary
        // influence accumulated over the steps.
        let kernel = four_corner_kernel();
        let delta = 2.0f64.powi(-4);
        let b = delta.powf(1.0 / 1.5);
        let h = b / 4.0;
        let half = (12.0 / h).ceil() as usize;
        let n = 2 * half + 1;
        let phi = |x: f64| (x * 0.7).sin() * (-(x / 5.0) * (x / 5.0)).exp();
        let shift_cells = 3usize;
        let v = GridFunction::sample(phi, -(half as f64) * h, h, n, Extension::Constant).unwrap();
        let vs = GridFunction::sample(
            |x| phi(x + shift_cells as f64 * h),
            -(half as f64) * h,
            h,
            n,
            Extension::Constant,
        )
        .unwrap();
        let steps = 4;
        let mut a = v;
        let mut bshift = vs;
        let mut op = StepOperator::new(&kernel, &a, delta, None, steps).unwrap();
        for _ in 0..steps {
            a = op.apply(&a);
            bshift = op.apply(&bshift);
        }
        // Influence bound: per-step escape mass at the interior window
        // times the data oscillation, accumulated over the steps.
        let margin = n / 4;
        let window_z = margin as f64 * (h / b);
        let escape =
            kernel.max_over_corners(|spec| spec.cdf(-window_z) + (1.0 - spec.cdf(window_z)));
        let osc = 2.0;
        let bound = steps as f64 * escape * osc + 1e-10;
        let mut worst = 0.0f64;
        for i in margin..(n - margin - shift_cells) {
            worst = worst.max((bshift.values()[i] - a.values()[i + shift_cells]).abs());
        }
        assert!(
            worst <= bound,
            "shift mismatch {worst:.3e} exceeds influence bound {bound:.3e}"
        );
    }

    #[test]
    fn time_evaluation_is_piecewise_constant() {
        let kernel = singleton_kernel(1.5);
        let params = kernel.params();
        let config = SchemeConfig::with_defaults(params, 0.25);
        let phi = Integrand::new(|x: f64| x.abs().min(2.0));
        let sol = solve(&kernel, &phi, &config).unwrap();
        for k in 0..config.steps() {
            let t0 = k as f64 * 0.25;
            for frac in [0.0, 0.3, 0.9] {
                let t = t0 + frac * 0.25;
                assert_eq!(sol.slice_index(t), k);
            }
        }
        assert_eq!(sol.slice_index(params.horizon), config.steps());
        // Sup-norm never exceeds the initial datum's.
        for slice in &sol.slices {
            assert!(slice.min_value() >= 0.0 - 1e-15);
            assert!(slice.max_value() <= 2.0 + 1e-15);
        }
    }

    #[test]
    fn periodic_point_evaluation_matches_grid_node() {
        let kernel = four_corner_kernel();
        let delta = 0.25f64;
        let b = delta.powf(1.0 / 1.5);
        let n = 512;
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let v = GridFunction::sample(
            |x| x.cos(),
            -std::f64::consts::PI,
            h,
            n,
            Extension::Periodic,
        )
        .unwrap();
        let out = step(&kernel, &v, delta).unwrap();
        let x = v.node_x(137);
        let point = expect_shifted(&kernel, &v, b, x, None);
        assert_abs_diff_eq!(point, out.values()[137], epsilon = 1e-9);
    }
}
