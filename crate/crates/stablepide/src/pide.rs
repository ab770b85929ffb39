//! The continuous nonlocal operator for smooth test functions, the
//! consistency residual of the scheme, and the analytic reference
//! solution for the classical (singleton) linear case.

use crate::error::{Error, Result};
use crate::measure::assumption_constants;
use crate::quad::{self, GaussLegendre};
use crate::sublinear::{Integrand, SublinearKernel};
use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// A smooth space-time test function with closed-form derivatives and
/// their sup-norms over `[0, T] x R`.
#[derive(Clone)]
pub struct SmoothTestFunction {
    pub name: String,
    omega: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    dt: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    dx: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    dxx: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    dtt: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    dtx: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub sup_dt2: f64,
    pub sup_dtdx: f64,
    pub sup_dxx: f64,
    pub sup_dx: f64,
    pub sup_omega: f64,
    /// Beyond this distance from the evaluation point the function is
    /// flat to working precision (infinite for oscillating functions).
    pub decay_range: f64,
}

impl std::fmt::Debug for SmoothTestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothTestFunction")
            .field("name", &self.name)
            .finish()
    }
}

impl SmoothTestFunction {
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        (self.omega)(t, x)
    }

    pub fn dt(&self, t: f64, x: f64) -> f64 {
        (self.dt)(t, x)
    }

    pub fn dx(&self, t: f64, x: f64) -> f64 {
        (self.dx)(t, x)
    }

    pub fn dxx(&self, t: f64, x: f64) -> f64 {
        (self.dxx)(t, x)
    }

    pub fn dtt(&self, t: f64, x: f64) -> f64 {
        (self.dtt)(t, x)
    }

    pub fn dtx(&self, t: f64, x: f64) -> f64 {
        (self.dtx)(t, x)
    }

    pub fn constant(c: f64) -> Self {
        SmoothTestFunction {
            name: format!("const({c})"),
            omega: Arc::new(move |_, _| c),
            dt: Arc::new(|_, _| 0.0),
            dx: Arc::new(|_, _| 0.0),
            dxx: Arc::new(|_, _| 0.0),
            dtt: Arc::new(|_, _| 0.0),
            dtx: Arc::new(|_, _| 0.0),
            sup_dt2: 0.0,
            sup_dtdx: 0.0,
            sup_dxx: 0.0,
            sup_dx: 0.0,
            sup_omega: c.abs(),
            decay_range: 0.0,
        }
    }

    /// `omega(t, x) = a + b x` (time independent).
    pub fn affine(a: f64, b: f64) -> Self {
        SmoothTestFunction {
            name: format!("affine({a},{b})"),
            omega: Arc::new(move |_, x| a + b * x),
            dt: Arc::new(|_, _| 0.0),
            dx: Arc::new(move |_, _| b),
            dxx: Arc::new(|_, _| 0.0),
            dtt: Arc::new(|_, _| 0.0),
            dtx: Arc::new(|_, _| 0.0),
            sup_dt2: 0.0,
            sup_dtdx: 0.0,
            sup_dxx: 0.0,
            sup_dx: b.abs(),
            sup_omega: f64::INFINITY,
            decay_range: f64::INFINITY,
        }
    }

    /// `omega(t, x) = cos x` (time independent).
    pub fn cos_x() -> Self {
        SmoothTestFunction {
            name: "cos".into(),
            omega: Arc::new(|_, x: f64| x.cos()),
            dt: Arc::new(|_, _| 0.0),
            dx: Arc::new(|_, x: f64| -x.sin()),
            dxx: Arc::new(|_, x: f64| -x.cos()),
            dtt: Arc::new(|_, _| 0.0),
            dtx: Arc::new(|_, _| 0.0),
            sup_dt2: 0.0,
            sup_dtdx: 0.0,
            sup_dxx: 1.0,
            sup_dx: 1.0,
            sup_omega: 1.0,
            decay_range: f64::INFINITY,
        }
    }

    /// `omega(t, x) = exp(-x^2) (1 + t/2)` on the horizon `[0, t_max]`.
    pub fn gaussian_bump(t_max: f64) -> Self {
        let scale = 1.0 + t_max / 2.0;
        SmoothTestFunction {
            name: "bump".into(),
            omega: Arc::new(|t, x: f64| (-x * x).exp() * (1.0 + t / 2.0)),
            dt: Arc::new(|_, x: f64| 0.5 * (-x * x).exp()),
            dx: Arc::new(|t, x: f64| -2.0 * x * (-x * x).exp() * (1.0 + t / 2.0)),
            dxx: Arc::new(|t, x: f64| (4.0 * x * x - 2.0) * (-x * x).exp() * (1.0 + t / 2.0)),
            dtt: Arc::new(|_, _| 0.0),
            dtx: Arc::new(|_, x: f64| -x * (-x * x).exp()),
            sup_dt2: 0.0,
            // max |x e^{-x^2}| = e^{-1/2}/sqrt(2)
            sup_dtdx: (0.5f64).exp().recip() / 2.0f64.sqrt(),
            sup_dxx: 2.0 * scale,
            sup_dx: 2.0f64.sqrt() * (0.5f64).exp().recip() * scale,
            sup_omega: scale,
            decay_range: 9.0,
        }
    }

    /// Largest mismatch between the supplied derivative rules and central
    /// finite differences at the given points (self-check).
    pub fn derivative_self_check(&self, points: &[(f64, f64)]) -> f64 {
        let e1 = 1e-6;
        let e2 = 1e-4;
        let mut worst = 0.0f64;
        for &(t, x) in points {
            let fd_dx = (self.eval(t, x + e1) - self.eval(t, x - e1)) / (2.0 * e1);
            let fd_dt = (self.eval(t + e1, x) - self.eval(t - e1, x)) / (2.0 * e1);
            let fd_dxx =
                (self.eval(t, x + e2) - 2.0 * self.eval(t, x) + self.eval(t, x - e2)) / (e2 * e2);
            worst = worst.max((fd_dx - self.dx(t, x)).abs());
            worst = worst.max((fd_dt - self.dt(t, x)).abs());
            worst = worst.max((fd_dxx - self.dxx(t, x)).abs());
        }
        worst
    }
}

/// The jump intensity `k_- / |z|^{alpha+1}` on the negative half-line and
/// `k_+ / z^{alpha+1}` on the positive one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyMeasureView {
    pub k_minus: f64,
    pub k_plus: f64,
    pub alpha: f64,
}

impl LevyMeasureView {
    pub fn new(k_minus: f64, k_plus: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) || k_minus < 0.0 || k_plus < 0.0 {
            return Err(Error::InvalidParameters(
                "jump intensity needs alpha in (1,2) and nonnegative weights".into(),
            ));
        }
        Ok(LevyMeasureView {
            k_minus,
            k_plus,
            alpha,
        })
    }

    /// `∫ |z| ∧ |z|^2  dν`, finite for alpha in (1, 2).
    pub fn small_large_moment(&self) -> f64 {
        (self.k_minus + self.k_plus) * (1.0 / (2.0 - self.alpha) + 1.0 / (self.alpha - 1.0))
    }
}

/// Unit-weight one-sided integrals of the second-order difference
/// `delta_z omega = omega(x+z) - omega(x) - dx omega(x) z` against
/// `|z|^{-1-alpha}`; the corner value is their `(k_-, k_+)` combination.
/// Returns `(positive side, negative side, remainder estimate)`.
fn one_sided_generator_integrals(
    omega: &SmoothTestFunction,
    t: f64,
    x: f64,
    alpha: f64,
    levels: u32,
    refine_outer: bool,
) -> (f64, f64, f64) {
    let rule = GaussLegendre::order(16);
    let w0 = omega.eval(t, x);
    let dx0 = omega.dx(t, x);
    let delta = |z: f64| omega.eval(t, x + z) - w0 - dx0 * z;

    // Beyond this radius the direct panel integration stops and the tail
    // is closed analytically.
    let reach = if omega.decay_range.is_finite() {
        (omega.decay_range + x.abs() + 2.0).max(2.0)
    } else {
        // Bounded oscillating data: push until the residual mass bound
        // meets the accuracy budget of the operator.
        (3.0 * omega.sup_omega.max(1.0) / (alpha * 2e-8)).powf(1.0 / alpha)
    };

    let mut worst_rem = 0.0f64;

    // Inner (0, 1]: split into even and odd parts of delta. The even part
    // S(z) = omega(x+z) + omega(x-z) - 2 omega(x) carries no cubic term
    // and the odd part A(z) = omega(x+z) - omega(x-z) - 2 dx z starts at
    // z^3, so a moderate graded mesh with geometric extrapolation of the
    // terminal reaches ~1e-8 before evaluation roundoff (amplified by
    // z^{-1-alpha}) takes over.
    let sym = |z: f64| omega.eval(t, x + z) + omega.eval(t, x - z) - 2.0 * w0;
    let asym = |z: f64| omega.eval(t, x + z) - omega.eval(t, x - z) - 2.0 * dx0 * z;
    let mut sym_panels = Vec::with_capacity(levels as usize);
    let mut asym_panels = Vec::with_capacity(levels as usize);
    let mut hi = 1.0f64;
    for _ in 0..levels {
        let lo = 0.5 * hi;
        sym_panels.push(rule.integrate(lo, hi, |z| sym(z) * z.powf(-1.0 - alpha)));
        asym_panels.push(rule.integrate(lo, hi, |z| asym(z) * z.powf(-1.0 - alpha)));
        hi = lo;
    }
    let cut = 0.5f64.powi(levels as i32);
    let extrapolate = |panels: &[f64], fallback: f64| -> (f64, f64) {
        let l = panels.len();
        let (p2, p1) = (panels[l - 2], panels[l - 1]);
        if p2 != 0.0 && p1 != 0.0 {
            let rho = p1 / p2;
            if rho > 0.0 && rho < 0.9 {
                let r = p1 * rho / (1.0 - rho);
                return (r, (r - fallback).abs().min(r.abs()) * 0.1 + 1e-16);
            }
        }
        (fallback, fallback.abs() * 0.5 + 1e-16)
    };
    // Curvature model for the even terminal.
    let sym_model = omega.dxx(t, x) * cut.powf(2.0 - alpha) / (2.0 - alpha);
    let (sym_tail, sym_est) = extrapolate(&sym_panels, sym_model);
    let (asym_tail, asym_est) = extrapolate(&asym_panels, 0.0);
    worst_rem = worst_rem.max(sym_est + asym_est);
    let sym_total: f64 = sym_panels.iter().sum::<f64>() + sym_tail;
    let asym_total: f64 = asym_panels.iter().sum::<f64>() + asym_tail;
    let inner_pos = 0.5 * (sym_total + asym_total);
    let inner_neg = 0.5 * (sym_total - asym_total);

    let mut sides = [inner_pos, inner_neg];
    for (side, sgn) in [(0usize, 1.0f64), (1usize, -1.0f64)] {
        // Outer [1, reach]: geometric panels capped in width so an
        // oscillating integrand stays resolved.
        let mut outer = 0.0;
        let mut lo = 1.0f64;
        let width_cap = if refine_outer { 0.4 } else { 0.8 };
        while lo < reach {
            let hi = (lo * 1.25).min(lo + width_cap).min(reach);
            outer += rule.integrate(lo, hi, |z| delta(sgn * z) * z.powf(-1.0 - alpha));
            lo = hi;
        }
        // Analytic tail of the -w0 - dx0 z part; the omega(x + z) part is
        // zero to working precision past the decay range, otherwise it is
        // charged to the remainder estimate.
        let tail_mass = reach.powf(-alpha) / alpha;
        let tail_moment = reach.powf(1.0 - alpha) / (alpha - 1.0);
        outer += -w0 * tail_mass - dx0 * sgn * tail_moment;
        if omega.decay_range.is_finite() {
            let probe = omega.eval(t, x + sgn * (reach + 1.0)).abs();
            worst_rem = worst_rem.max(probe * tail_mass);
        } else {
            worst_rem = worst_rem.max(2.0 * omega.sup_omega * tail_mass);
        }

        sides[side] += outer;
    }
    (sides[0], sides[1], worst_rem)
}

/// `sup over the corner set of ∫ delta_z omega(t, x) dν_{k±}`: the
/// nonlocal operator of the limiting equation applied to a smooth test
/// function. The per-corner integral is affine in `(k_-, k_+)`.
pub fn nonlocal_operator(
    views: &[LevyMeasureView],
    omega: &SmoothTestFunction,
    t: f64,
    x: f64,
) -> Result<f64> {
    if views.is_empty() {
        return Err(Error::InvalidParameters("empty corner set".into()));
    }
    if omega.sup_dxx == 0.0 {
        // delta_z omega vanishes identically for affine data.
        return Ok(0.0);
    }
    let alpha = views[0].alpha;
    let (pos_a, neg_a, rem_a) = one_sided_generator_integrals(omega, t, x, alpha, 13, false);
    let (pos_b, neg_b, rem_b) = one_sided_generator_integrals(omega, t, x, alpha, 15, true);
    let kmax = views
        .iter()
        .map(|v| v.k_minus.max(v.k_plus))
        .fold(0.0f64, f64::max);
    let disagreement = kmax * ((pos_a - pos_b).abs() + (neg_a - neg_b).abs() + rem_a.max(rem_b));
    if disagreement > 1e-7 {
        return Err(Error::accuracy(disagreement, 1e-7, "nonlocal operator"));
    }
    Ok(views
        .iter()
        .map(|v| v.k_plus * pos_b + v.k_minus * neg_b)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Corner views of a kernel's control set.
pub fn kernel_views(kernel: &SublinearKernel) -> Vec<LevyMeasureView> {
    kernel
        .params()
        .corners()
        .into_iter()
        .map(|(km, kp)| LevyMeasureView {
            k_minus: km,
            k_plus: kp,
            alpha: kernel.alpha(),
        })
        .collect()
}

/// Consistency residual of the scheme on a smooth test function, and the
/// assembled bound from the assumption constants and the function's
/// derivative sup-norms. The residual must sit below the bound.
pub fn consistency_residual(
    kernel: &SublinearKernel,
    omega: &SmoothTestFunction,
    delta: f64,
    t: f64,
    x: f64,
) -> Result<(f64, f64)> {
    if t < delta {
        return Err(Error::InvalidParameters(format!(
            "need t >= delta, got t={t}, delta={delta}"
        )));
    }
    let b_scale = kernel.params().kernel_scale(delta);
    let shifted = Integrand::new({
        let omega = omega.clone();
        let t_prev = t - delta;
        move |z: f64| omega.eval(t_prev, x + b_scale * z)
    });
    let expectation = kernel.expect(&shifted)?;
    let s_value = (omega.eval(t, x) - expectation) / delta;
    let nonlocal = nonlocal_operator(&kernel_views(kernel), omega, t, x)?;
    let residual = (omega.dt(t, x) - nonlocal - s_value).abs();

    let constants = assumption_constants(kernel.params(), kernel.profile(), delta)?;
    let bound = (1.0 + constants.m_xi_1)
        * (omega.sup_dt2 * delta + omega.sup_dtdx * delta.powf(1.0 / kernel.alpha()))
        + constants.r0 * omega.sup_dxx * delta.powf((2.0 - kernel.alpha()) / kernel.alpha())
        + omega.sup_dxx * constants.r1_delta
        + omega.sup_dx * constants.r2_delta;
    Ok((residual, bound))
}

/// `c(alpha, k) = 2k ∫_0^inf (1 - cos u) u^{-1-alpha} du`, memoized.
/// The classical exponent making `e^{-t c} cos x` the singleton-case
/// solution.
pub fn stable_cosine_exponent(alpha: f64, k: f64) -> f64 {
    static CACHE: Lazy<Mutex<HashMap<u64, f64>>> = Lazy::new(|| Mutex::new(HashMap::new()));
    let key = alpha.to_bits();
    let base = {
        let cache = CACHE.lock().unwrap();
        cache.get(&key).copied()
    };
    let base = match base {
        Some(v) => v,
        None => {
            let v = cosine_exponent_base(alpha);
            CACHE.lock().unwrap().insert(key, v);
            v
        }
    };
    2.0 * k * base
}

/// The unit-weight integral `∫_0^inf (1 - cos u) u^{-1-alpha} du`.
fn cosine_exponent_base(alpha: f64) -> f64 {
    let rule = GaussLegendre::order(16);
    // Head (0, 1]: write the integrand as g(u) u^{1-alpha} with the
    // bounded factor g(u) = (1 - cos u)/u^2, g(0) = 1/2 (series near zero
    // avoids cancellation).
    let head = quad::integrate_singular(&rule, 1.0, alpha, 0.5, 60, 0.5, |u| {
        if u < 1e-3 {
            let u2 = u * u;
            0.5 - u2 / 24.0 + u2 * u2 / 720.0
        } else {
            (1.0 - u.cos()) / (u * u)
        }
    });
    // Tail [1, inf): two integrations by parts reduce to an absolutely
    // convergent integral against u^{-3-alpha}:
    //  ∫_1^inf (1-cos u) u^{-1-alpha} du = 1/alpha - C1,
    //  C1 = -sin 1 + (1+alpha) (cos 1 - (2+alpha) C3),
    //  C3 = ∫_1^inf cos(u) u^{-3-alpha} du.
    let reach = 4000.0f64;
    let mut c3 = 0.0;
    let mut lo = 1.0f64;
    while lo < reach {
        let hi = (lo + std::f64::consts::FRAC_PI_2).min(reach);
        c3 += rule.integrate(lo, hi, |u: f64| u.cos() * u.powf(-3.0 - alpha));
        lo = hi;
    }
    let c1 = -(1.0f64.sin()) + (1.0 + alpha) * (1.0f64.cos() - (2.0 + alpha) * c3);
    head + 1.0 / alpha - c1
}

/// Named initial data supported by the analytic linear reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferencePhi {
    Cos,
}

/// Classical singleton-case solution `u(t, x) = e^{-t c(alpha,k)} cos x`.
pub fn reference_linear(alpha: f64, k: f64, phi: ReferencePhi, t: f64, x: f64) -> Result<f64> {
    match phi {
        ReferencePhi::Cos => {
            let c = stable_cosine_exponent(alpha, k);
            Ok((-t * c).exp() * x.cos())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{StableParams, TailProfile};
    use crate::sublinear::QuadBudget;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cosine_exponent_matches_gamma_closed_form() {
        // ∫_0^inf (1-cos u) u^{-1-alpha} du = -Gamma(-alpha) cos(pi alpha/2)
        use statrs::function::gamma::gamma;
        for &alpha in &[1.2, 1.5, 1.8] {
            let closed = -(gamma(2.0 - alpha) / (alpha * (alpha - 1.0)))
                * (std::f64::consts::PI * alpha / 2.0).cos();
            let quadrature = cosine_exponent_base(alpha);
            assert_abs_diff_eq!(quadrature, closed, epsilon = 1e-10);
        }
    }

    #[test]
    fn reference_scaling_and_time_zero() {
        let v = reference_linear(1.5, 0.5, ReferencePhi::Cos, 0.0, 0.7).unwrap();
        assert_abs_diff_eq!(v, 0.7f64.cos(), epsilon = 1e-15);
        // c enters through t * c, linear in k.
        let a = reference_linear(1.5, 0.5, ReferencePhi::Cos, 2.0, 0.0).unwrap();
        let b = reference_linear(1.5, 1.0, ReferencePhi::Cos, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-13);
    }

    #[test]
    fn nonlocal_operator_annihilates_affine_data() {
        let views = [LevyMeasureView::new(0.4, 0.6, 1.5).unwrap()];
        let omega = SmoothTestFunction::affine(2.0, -0.7);
        let v = nonlocal_operator(&views, &omega, 0.3, 1.1).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn nonlocal_operator_on_cosine_gives_minus_exponent() {
        let views = [LevyMeasureView::new(0.5, 0.5, 1.5).unwrap()];
        let omega = SmoothTestFunction::cos_x();
        let v = nonlocal_operator(&views, &omega, 0.0, 0.0).unwrap();
        let c = stable_cosine_exponent(1.5, 0.5);
        assert_abs_diff_eq!(v, -c, epsilon = 1e-6);
    }

    #[test]
    fn nonlocal_operator_bump_matches_brute_force() {
        let views = [LevyMeasureView::new(0.5, 0.5, 1.5).unwrap()];
        let omega = SmoothTestFunction::gaussian_bump(1.0);
        let v = nonlocal_operator(&views, &omega, 0.0, 0.0).unwrap();
        // Brute force: symmetric integrand on graded panels down to a cut
        // where the quadratic Taylor tail takes over (the raw difference
        // e^{-z^2} - 1 is roundoff-dominated below ~1e-5).
        let rule = GaussLegendre::order(32);
        let delta = |z: f64| omega.eval(0.0, z) + omega.eval(0.0, -z) - 2.0 * omega.eval(0.0, 0.0);
        let mut brute = 0.0;
        let mut hi = 30.0f64;
        for _ in 0..64 {
            let lo = hi * 0.85;
            brute += rule.integrate(lo, hi, |z| 0.5 * delta(z) * z.powf(-2.5));
            hi = lo;
        }
        // 0.5 * S(z) ~ -z^2 + z^4/2 below the cut; ~ -1 beyond the outer
        // edge where the bump has fully decayed.
        brute += -2.0 * hi.sqrt() + 0.2 * hi.powf(2.5);
        brute += -(30.0f64.powf(-1.5)) / 1.5;
        assert_abs_diff_eq!(v, brute, epsilon = 1e-6);
    }

    #[test]
    fn maximum_principle_surrogate() {
        // At the global maximum of the bump, delta_z omega <= 0.
        let views = [
            LevyMeasureView::new(0.38, 0.42, 1.5).unwrap(),
            LevyMeasureView::new(0.42, 0.38, 1.5).unwrap(),
        ];
        let omega = SmoothTestFunction::gaussian_bump(0.0);
        let v = nonlocal_operator(&views, &omega, 0.0, 0.0).unwrap();
        assert!(
            v <= 1e-9,
            "operator at the max must be nonpositive, got {v}"
        );
    }

    #[test]
    fn corner_affinity_of_the_nonlocal_integral() {
        let omega = SmoothTestFunction::gaussian_bump(0.5);
        let single = |km: f64, kp: f64| {
            nonlocal_operator(
                &[LevyMeasureView::new(km, kp, 1.5).unwrap()],
                &omega,
                0.2,
                0.4,
            )
            .unwrap()
        };
        let centroid = single(0.40, 0.40);
        let average = 0.25
            * (single(0.38, 0.38) + single(0.38, 0.42) + single(0.42, 0.38) + single(0.42, 0.42));
        assert_abs_diff_eq!(centroid, average, epsilon = 1e-10);
    }

    #[test]
    fn consistency_residual_examples() {
        let params = StableParams::new(1.5, 0.5, 0.5, 1.0).unwrap();
        let kernel =
            SublinearKernel::new(params, TailProfile::Compact, QuadBudget::default()).unwrap();
        // Constant test function: residual zero, bound positive.
        // All derivative sup-norms vanish, so the assembled bound is zero
        // and the residual must sit exactly on it.
        let (r, b) =
            consistency_residual(&kernel, &SmoothTestFunction::constant(3.0), 0.125, 0.5, 0.2)
                .unwrap();
        assert!(r < 1e-12);
        assert!(b >= 0.0 && r <= b + 1e-15);
        // Affine: both the operator and the scheme vanish.
        let (r, _) = consistency_residual(
            &kernel,
            &SmoothTestFunction::affine(1.0, 1.0),
            0.125,
            0.5,
            -0.3,
        )
        .unwrap();
        assert!(r < 1e-9, "affine residual {r}");
        // Gaussian bump: residual below the assembled bound.
        let omega = SmoothTestFunction::gaussian_bump(1.0);
        for delta in [0.0625, 0.015625] {
            let (r, b) = consistency_residual(&kernel, &omega, delta, 0.5, 0.7).unwrap();
            assert!(r <= b, "residual {r} exceeds bound {b} at delta {delta}");
        }
    }

    #[test]
    fn derivative_self_check_passes() {
        let pts: Vec<(f64, f64)> = (0..25)
            .map(|i| (0.1 + 0.03 * i as f64, -2.0 + 0.17 * i as f64))
            .collect();
        for omega in [
            SmoothTestFunction::constant(2.0),
            SmoothTestFunction::affine(1.0, -2.0),
            SmoothTestFunction::cos_x(),
            SmoothTestFunction::gaussian_bump(1.0),
        ] {
            assert!(omega.derivative_self_check(&pts) < 1e-6);
        }
    }
}
