//! The sublinear expectation: a maximum of classical expectations over
//! the corner set of the control square, with analytic tail handling.

use crate::error::{Error, Result};
use crate::measure::{DistributionSpec, StableParams, TailProfile};
use crate::quad::{self, GaussLegendre};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Quadrature budget for generic integrands. The scheme itself never
/// uses this path (grid expectations are exact); it serves arbitrary
/// bounded-Lipschitz test functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadBudget {
    /// Composite panels on each of `[-1, 0]` and `[0, 1]`.
    pub middle_panels: usize,
    /// Graded levels (ratio `grading_ratio`) for the substituted tail
    /// integral on `(0, 1]`.
    pub tail_levels: u32,
    pub grading_ratio: f64,
    /// Absolute tolerance demanded from every expectation.
    pub tolerance: f64,
}

impl Default for QuadBudget {
    fn default() -> Self {
        QuadBudget {
            middle_panels: 16,
            tail_levels: 40,
            grading_ratio: 0.5,
            tolerance: 1e-9,
        }
    }
}

/// A real integrand with optional regularity metadata.
#[derive(Clone)]
pub struct Integrand {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub lipschitz_bound: Option<f64>,
    pub sup_bound: Option<f64>,
    /// Known kink locations; quadrature panels split there.
    pub breakpoints: Vec<f64>,
}

impl Integrand {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Integrand {
            f: Arc::new(f),
            lipschitz_bound: None,
            sup_bound: None,
            breakpoints: Vec::new(),
        }
    }

    pub fn with_bounds(mut self, lipschitz: Option<f64>, sup: Option<f64>) -> Self {
        self.lipschitz_bound = lipschitz;
        self.sup_bound = sup;
        self
    }

    pub fn with_breakpoints(mut self, points: &[f64]) -> Self {
        self.breakpoints = points.to_vec();
        self.breakpoints.sort_by(f64::total_cmp);
        self
    }

    #[inline]
    pub fn eval(&self, z: f64) -> f64 {
        (self.f)(z)
    }
}

impl std::fmt::Debug for Integrand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Integrand")
            .field("lipschitz_bound", &self.lipschitz_bound)
            .field("sup_bound", &self.sup_bound)
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

/// Integrate over `[a, b]` with `panels` equal panels, additionally
/// splitting at the supplied kink locations.
fn composite_with_breaks(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    panels: usize,
    breaks: &[f64],
    f: impl Fn(f64) -> f64,
) -> f64 {
    let mut edges = vec![a];
    for &p in breaks {
        if p > a && p < b {
            edges.push(p);
        }
    }
    edges.push(b);
    let mut total = 0.0;
    for pair in edges.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let share = ((panels as f64) * (hi - lo) / (b - a)).ceil() as usize;
        total += quad::composite(rule, lo, hi, share.max(1), &f);
    }
    total
}

/// Result of an expectation with its internal accuracy estimate and the
/// maximizing corner (ties broken lexicographically).
#[derive(Debug, Clone, Copy)]
pub struct Expectation {
    pub value: f64,
    pub error_estimate: f64,
    pub argmax_corner: (f64, f64),
}

/// The four corner distributions plus a quadrature budget; realizes the
/// sublinear expectation as a maximum of integrals.
#[derive(Debug, Clone)]
pub struct SublinearKernel {
    params: StableParams,
    profile: TailProfile,
    corners: Vec<DistributionSpec>,
    quad: QuadBudget,
}

impl SublinearKernel {
    pub fn new(params: StableParams, profile: TailProfile, quad: QuadBudget) -> Result<Self> {
        if matches!(profile, TailProfile::Compact) && !(params.r2 < params.alpha / 2.0) {
            return Err(Error::InvalidParameters(format!(
                "compact profile requires r2 < alpha/2, got r2={}, alpha={}",
                params.r2, params.alpha
            )));
        }
        let corners = params
            .corners()
            .into_iter()
            .map(|(km, kp)| DistributionSpec::build(params.alpha, km, kp, profile))
            .collect::<Result<Vec<_>>>()?;
        Ok(SublinearKernel {
            params,
            profile,
            corners,
            quad,
        })
    }

    pub fn params(&self) -> &StableParams {
        &self.params
    }

    pub fn profile(&self) -> TailProfile {
        self.profile
    }

    pub fn alpha(&self) -> f64 {
        self.params.alpha
    }

    pub fn corners(&self) -> &[DistributionSpec] {
        &self.corners
    }

    pub fn is_singleton(&self) -> bool {
        self.corners.len() == 1
    }

    pub fn quad(&self) -> &QuadBudget {
        &self.quad
    }

    /// Maximum of a per-corner functional, corner order fixed.
    pub fn max_over_corners(&self, g: impl Fn(&DistributionSpec) -> f64) -> f64 {
        self.corners.iter().map(g).fold(f64::NEG_INFINITY, f64::max)
    }

    /// The sublinear expectation of `f`.
    pub fn expect(&self, f: &Integrand) -> Result<f64> {
        Ok(self.expect_detailed(f)?.value)
    }

    /// Expectation with accuracy estimate and maximizing corner.
    pub fn expect_detailed(&self, f: &Integrand) -> Result<Expectation> {
        self.expect_impl(f, None)
    }

    /// `E[f(ξ ∧ N ∨ -N)]`: interior quadrature plus exact point masses
    /// at the clamp level.
    pub fn expect_clamped(&self, f: &Integrand, level: f64) -> Result<f64> {
        if !(level > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "clamp level must be positive, got {level}"
            )));
        }
        Ok(self.expect_impl(f, Some(level))?.value)
    }

    /// `E|ξ|`, by the closed-form decomposition per corner.
    pub fn expect_abs(&self) -> f64 {
        self.max_over_corners(|d| d.abs_moment())
    }

    fn expect_impl(&self, f: &Integrand, clamp: Option<f64>) -> Result<Expectation> {
        let mut best = f64::NEG_INFINITY;
        let mut best_corner = (f64::NAN, f64::NAN);
        let mut worst_estimate = 0.0f64;
        for spec in &self.corners {
            let coarse = corner_integral(spec, f, &self.quad, clamp, false);
            let fine = corner_integral(spec, f, &self.quad, clamp, true);
            let estimate = (fine.0 - coarse.0).abs() + fine.1;
            worst_estimate = worst_estimate.max(estimate);
            let corner = (spec.k_minus(), spec.k_plus());
            if fine.0 > best || (fine.0 == best && corner < best_corner) {
                best = fine.0;
                best_corner = corner;
            }
        }
        if worst_estimate > self.quad.tolerance {
            return Err(Error::accuracy(
                worst_estimate,
                self.quad.tolerance,
                "sublinear expectation",
            ));
        }
        Ok(Expectation {
            value: best,
            error_estimate: worst_estimate,
            argmax_corner: best_corner,
        })
    }
}

/// One corner integral `∫ f dF` (or its clamped variant). Returns the
/// value and a bound on the neglected tail remainder. The constant part
/// of `f` is split off so that constants are preserved exactly.
fn corner_integral(
    spec: &DistributionSpec,
    f: &Integrand,
    budget: &QuadBudget,
    clamp: Option<f64>,
    refined: bool,
) -> (f64, f64) {
    let mid_rule = GaussLegendre::order(16);
    let tail_rule = GaussLegendre::order(16);
    let panels = if refined {
        budget.middle_panels * 2
    } else {
        budget.middle_panels
    };
    let levels = if refined {
        budget.tail_levels + 8
    } else {
        budget.tail_levels
    };
    let f0 = f.eval(0.0);
    let g = |z: f64| f.eval(z) - f0;

    let mut total = 0.0;
    let mut remainder = 0.0;

    match clamp {
        None => {
            // Middle region against the cubic density.
            total += composite_with_breaks(&mid_rule, -1.0, 0.0, panels, &f.breakpoints, |z| {
                g(z) * spec.pdf(z)
            });
            total += composite_with_breaks(&mid_rule, 0.0, 1.0, panels, &f.breakpoints, |z| {
                g(z) * spec.pdf(z)
            });
            // Tails via s = z^{-alpha}, graded toward s = 0.
            for negative in [false, true] {
                let (value, rem) = tail_integral(
                    spec,
                    f,
                    &g,
                    negative,
                    &tail_rule,
                    levels,
                    budget.grading_ratio,
                    refined,
                );
                total += value;
                remainder += rem;
            }
        }
        Some(level) => {
            let m = level.min(1.0);
            total += composite_with_breaks(&mid_rule, -m, 0.0, panels, &f.breakpoints, |z| {
                g(z) * spec.pdf(z)
            });
            total += composite_with_breaks(&mid_rule, 0.0, m, panels, &f.breakpoints, |z| {
                g(z) * spec.pdf(z)
            });
            if level > 1.0 {
                // Finite tail pieces on geometric panels per octave.
                let octave_panels = if refined { 8 } else { 4 };
                for negative in [false, true] {
                    let sgn = if negative { -1.0 } else { 1.0 };
                    let breaks: Vec<f64> = f
                        .breakpoints
                        .iter()
                        .map(|&b| sgn * b)
                        .filter(|&b| b > 1.0 && b < level)
                        .collect();
                    let mut lo = 1.0;
                    while lo < level {
                        let hi = (lo * 2.0).min(level);
                        total += composite_with_breaks(
                            &tail_rule,
                            lo,
                            hi,
                            octave_panels,
                            &breaks,
                            |z| g(sgn * z) * spec.pdf(sgn * z),
                        );
                        lo = hi;
                    }
                }
            }
            // Atoms carrying the clamped tail mass.
            total += g(-level) * spec.cdf(-level);
            total += g(level) * (1.0 - spec.cdf(level));
        }
    }
    (f0 + total, remainder)
}

/// `∫_1^inf g(±z) dF` via the substitution `s = z^{-alpha}`; graded
/// panels toward `s = 0` plus a geometric extrapolation of the terminal
/// remainder (the substituted integrand is asymptotically a pure power
/// for bounded or linear-growth `g`). Returns the value and an accuracy
/// estimate for the extrapolated part.
fn tail_integral(
    spec: &DistributionSpec,
    f_meta: &Integrand,
    g: &impl Fn(f64) -> f64,
    negative: bool,
    rule: &GaussLegendre,
    levels: u32,
    ratio: f64,
    subdivide: bool,
) -> (f64, f64) {
    let alpha = spec.alpha();
    let (k, amp, beta) = match (negative, spec.profile()) {
        (false, TailProfile::Compact) => (spec.k_plus(), 0.0, f64::INFINITY),
        (true, TailProfile::Compact) => (spec.k_minus(), 0.0, f64::INFINITY),
        (false, TailProfile::PowerTail { beta, a2, .. }) => (spec.k_plus(), a2, beta),
        (true, TailProfile::PowerTail { beta, a1, .. }) => (spec.k_minus(), a1, beta),
    };
    let sgn = if negative { -1.0 } else { 1.0 };
    let integrand = |s: f64| {
        let z = s.powf(-1.0 / alpha);
        let gv = g(sgn * z);
        let mut v = k / alpha * gv;
        if amp != 0.0 {
            v += amp * beta / alpha * s.powf((beta - alpha) / alpha) * gv;
        }
        v
    };
    // Kinks of f map to s = |b|^{-alpha}; panels split there.
    let mut s_breaks: Vec<f64> = f_meta
        .breakpoints
        .iter()
        .map(|&b| sgn * b)
        .filter(|&b| b > 1.0)
        .map(|b| b.powf(-alpha))
        .collect();
    s_breaks.sort_by(f64::total_cmp);

    let mut panels = Vec::with_capacity(levels as usize);
    let mut hi = 1.0f64;
    let mut value = 0.0;
    for _ in 0..levels {
        let lo = hi * ratio;
        // The refined pass splits every panel so that its error
        // decorrelates from the base pass and shows up in the estimate.
        let mut edges = vec![lo];
        for &b in &s_breaks {
            if b > lo && b < hi {
                edges.push(b);
            }
        }
        if subdivide {
            edges.push(0.5 * (lo + hi));
        }
        edges.push(hi);
        edges.sort_by(f64::total_cmp);
        let mut p = 0.0;
        for pair in edges.windows(2) {
            p += rule.integrate(pair[0], pair[1], integrand);
        }
        value += p;
        panels.push(p);
        hi = lo;
    }
    // Geometric remainder: panel integrals of a power-law integrand decay
    // at a fixed ratio; extrapolate and use the drift between the last
    // two extrapolations as the accuracy estimate.
    let extrapolate = |p_prev: f64, p_last: f64| -> Option<f64> {
        if p_prev == 0.0 || p_last == 0.0 {
            return Some(0.0);
        }
        let rho = p_last / p_prev;
        if rho > 0.0 && rho <= 0.95 {
            Some(p_last * rho / (1.0 - rho))
        } else {
            None
        }
    };
    let l = panels.len();
    let s_min = ratio.powi(levels as i32);
    let mut tail_mass = k / alpha * s_min;
    if amp != 0.0 {
        tail_mass += amp.abs() * s_min.powf(beta / alpha);
    }
    let z_big = s_min.powf(-1.0 / alpha);
    let g_far = g(sgn * z_big).abs().max(g(sgn * z_big * 4.0).abs());
    let crude = 4.0 * g_far * tail_mass;
    let (rem, estimate) = match (
        extrapolate(panels[l - 3], panels[l - 2]),
        extrapolate(panels[l - 2], panels[l - 1]),
    ) {
        (Some(r_prev), Some(r_last)) => {
            let drift = (r_last - (r_prev - panels[l - 1])).abs();
            (r_last, drift + f64::EPSILON * value.abs())
        }
        _ => (0.0, crude),
    };
    (value + rem, estimate)
}
