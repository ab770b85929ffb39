//! Quadrature primitives: Gauss-Legendre rules, composite panels and
//! geometrically graded meshes for integrands with a power singularity
//! at one endpoint.

use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// A Gauss-Legendre rule on the reference interval `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Build the rule by Newton iteration on the Legendre polynomial.
    fn build(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            // Chebyshev-based initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Cached rule of the given order.
    pub fn order(n: usize) -> Arc<GaussLegendre> {
        static CACHE: Lazy<Mutex<HashMap<usize, Arc<GaussLegendre>>>> =
            Lazy::new(|| Mutex::new(HashMap::new()));
        let mut cache = CACHE.lock().unwrap();
        cache
            .entry(n)
            .or_insert_with(|| Arc::new(GaussLegendre::build(n)))
            .clone()
    }

    /// Integrate `f` over `[a, b]` with a single panel.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(c + half * x);
        }
        sum * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrate `f` over `[a, b]` split into `panels` equal panels.
pub fn composite<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    panels: usize,
    mut f: F,
) -> f64 {
    let panels = panels.max(1);
    let w = (b - a) / panels as f64;
    let mut sum = 0.0;
    for i in 0..panels {
        let lo = a + i as f64 * w;
        sum += rule.integrate(lo, lo + w, &mut f);
    }
    sum
}

/// Integrate `f` over `(0, b]` on a geometric mesh graded toward 0 with
/// the given ratio: panels `[b r^{l+1}, b r^l]` for `l = 0..levels`.
/// The remainder `(0, b r^levels]` is left to the caller (analytic
/// extrapolation of the leading power).
pub fn graded_toward_zero<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    b: f64,
    ratio: f64,
    levels: u32,
    mut f: F,
) -> f64 {
    debug_assert!(ratio > 0.0 && ratio < 1.0);
    let mut sum = 0.0;
    let mut hi = b;
    for _ in 0..levels {
        let lo = hi * ratio;
        sum += rule.integrate(lo, hi, &mut f);
        hi = lo;
    }
    sum
}

/// `∫_0^b g(y) y^{1-alpha} dy` for bounded `g`, graded mesh with terminal
/// analytic extrapolation `g(0) * (b r^L)^{2-alpha} / (2-alpha)`.
pub fn integrate_singular<F: Fn(f64) -> f64>(
    rule: &GaussLegendre,
    b: f64,
    alpha: f64,
    ratio: f64,
    levels: u32,
    g_at_zero: f64,
    g: F,
) -> f64 {
    integrate_singular_with_breaks(rule, b, alpha, ratio, levels, g_at_zero, &[], g)
}

/// Graded singular quadrature with panels additionally split at the
/// given kink locations (sorted or not).
#[allow(clippy::too_many_arguments)]
pub fn integrate_singular_with_breaks<F: Fn(f64) -> f64>(
    rule: &GaussLegendre,
    b: f64,
    alpha: f64,
    ratio: f64,
    levels: u32,
    g_at_zero: f64,
    breaks: &[f64],
    g: F,
) -> f64 {
    debug_assert!(ratio > 0.0 && ratio < 1.0);
    let weighted = |y: f64| g(y) * y.powf(1.0 - alpha);
    let mut body = 0.0;
    let mut hi = b;
    for _ in 0..levels {
        let lo = hi * ratio;
        let mut edges = vec![lo];
        for &p in breaks {
            if p > lo && p < hi {
                edges.push(p);
            }
        }
        edges.push(hi);
        edges.sort_by(f64::total_cmp);
        for pair in edges.windows(2) {
            body += rule.integrate(pair[0], pair[1], weighted);
        }
        hi = lo;
    }
    let cut = b * ratio.powi(levels as i32);
    body + g_at_zero * cut.powf(2.0 - alpha) / (2.0 - alpha)
}

/// Smallest 5-smooth integer `>= n` (sizes on which FFTs are cheap).
pub fn next_fast_size(n: usize) -> usize {
    let mut best = usize::MAX;
    let mut p2 = 1usize;
    while p2 < best {
        let mut p23 = p2;
        while p23 < best {
            let mut p235 = p23;
            while p235 < best {
                if p235 >= n {
                    best = best.min(p235);
                    break;
                }
                match p235.checked_mul(5) {
                    Some(v) => p235 = v,
                    None => break,
                }
            }
            match p23.checked_mul(3) {
                Some(v) => p23 = v,
                None => break,
            }
        }
        match p2.checked_mul(2) {
            Some(v) => p2 = v,
            None => break,
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_legendre_is_exact_on_polynomials() {
        let rule = GaussLegendre::order(8);
        // Exact for degree <= 15.
        let val = rule.integrate(0.0, 1.0, |x| x.powi(15));
        assert_abs_diff_eq!(val, 1.0 / 16.0, epsilon = 1e-14);
        let val = rule.integrate(-1.0, 3.0, |x| 3.0 * x * x - x + 2.0);
        assert_abs_diff_eq!(val, 28.0 - 4.0 + 8.0, epsilon = 1e-12);
    }

    #[test]
    fn graded_mesh_handles_weak_singularity() {
        // ∫_0^1 y^{1-alpha} dy = 1/(2-alpha)
        let rule = GaussLegendre::order(16);
        for &alpha in &[1.2, 1.5, 1.8] {
            let val = integrate_singular(&rule, 1.0, alpha, 0.5, 60, 1.0, |_| 1.0);
            assert_abs_diff_eq!(val, 1.0 / (2.0 - alpha), epsilon = 1e-12);
        }
    }

    #[test]
    fn fast_sizes() {
        assert_eq!(next_fast_size(1), 1);
        assert_eq!(next_fast_size(17), 18);
        assert_eq!(next_fast_size(2560), 2560);
        assert_eq!(next_fast_size(25737), 25920);
    }
}
// quick probe via a unit test
#[test]
fn probe_pieces() {
    use crate::quad::{self, GaussLegendre};
    let rule = GaussLegendre::order(16);
    let alpha = 1.5f64;
    let inner = quad::graded_toward_zero(&rule, 1.0, 0.5, 60, |z: f64| {
        (z.cos() - 1.0) * z.powf(-1.0 - alpha)
    });
    println!("inner = {inner:.12}  (want -0.983638191409)");
    let reach = (3.0f64 / (alpha * 2e-8)).powf(1.0 / alpha);
    println!("reach = {reach:.3}");
    let mut outer = 0.0;
    let mut lo = 1.0f64;
    while lo < reach {
        let hi = (lo * 1.25).min(lo + 0.8).min(reach);
        outer += rule.integrate(lo, hi, |z: f64| (z.cos() - 1.0) * z.powf(-1.0 - alpha));
        lo = hi;
    }
    println!("outer = {outer:.12}  (want -0.687449592336)");
    let tail = -(reach.powf(-alpha)) / alpha;
    println!("total = {:.12}", inner + outer + tail);
}
