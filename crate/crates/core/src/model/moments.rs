use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ln_a1, ln_c_alpha, ModelParams, StableParams};
use crate::quad;
use crate::special::{ln_factorial, ln_gamma};
use crate::{Error, Result};

/// ln E[L_b^q] = q ln A₁ + ln Γ(q+1) − ln Γ(1 + q(1−1/α)) + q(1−1/α) ln b.
///
/// For integer q this is the exact moment of the local time started at zero.
/// Non-integer q uses the Gamma continuation of n!.
pub fn ln_lt_moment_exact(p: &StableParams, q: f64, b: f64) -> f64 {
    debug_assert!(q >= 0.0 && b > 0.0);
    if q == 0.0 {
        return 0.0;
    }
    let g = p.lt_index();
    q * ln_a1(p) + ln_factorial(q) - ln_gamma(1.0 + q * g) + q * g * b.ln()
}

pub fn lt_moment_exact(p: &StableParams, q: f64, b: f64) -> f64 {
    ln_lt_moment_exact(p, q, b).exp()
}

fn check_positive_interval(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && a <= b && b.is_finite()) {
        return Err(Error::Argument(format!(
            "need 0 < a <= b, got a = {a}, b = {b} (use the exact formula for a = 0)"
        )));
    }
    Ok(())
}

/// ln of the lower and upper bounds on E|L_b − L_a|^n for 0 < a ≤ b.
pub fn ln_lt_moment_bounds(p: &StableParams, n: u32, a: f64, b: f64) -> Result<(f64, f64)> {
    check_positive_interval(a, b)?;
    let al = p.alpha();
    let g = p.lt_index();
    let nf = n as f64;
    if a == b {
        return Ok((f64::NEG_INFINITY, f64::NEG_INFINITY));
    }
    let common = ((b - a) / b).ln() / al + nf * ln_a1(p) + ln_factorial(nf) + nf * g * (b - a).ln();
    let lower = common - ln_gamma(g) - ln_gamma(1.0 + 1.0 / al + nf * g);
    let upper = common - ln_gamma(1.0 + nf * g);
    Ok((lower, upper))
}

pub fn lt_moment_bounds(p: &StableParams, n: u32, a: f64, b: f64) -> Result<(f64, f64)> {
    let (lo, hi) = ln_lt_moment_bounds(p, n, a, b)?;
    Ok((lo.exp(), hi.exp()))
}

/// Result of a quadrature-backed moment: log value plus the relative error
/// estimate of the incomplete Beta integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LnMoment {
    pub ln_value: f64,
    pub rel_error: f64,
}

/// ln f(n, a, b), where f(n,a,b) = ∫₀^{(b−a)/b} v^{(n−1)(1−1/α)} (1−v)^{−1/α} dv.
///
/// The substitution `1 − v = w^{α/(α−1)}` removes the endpoint singularity:
/// f = k ∫_{w₀}^1 (1 − w^k)^e dw with k = α/(α−1), w₀ = (a/b)^{1/k}.
/// The integrand is rescaled by x^e, x = (b−a)/b, so it never underflows.
pub fn ln_incomplete_beta_f(p: &StableParams, n: u32, a: f64, b: f64, quad_tol: f64) -> Result<LnMoment> {
    check_positive_interval(a, b)?;
    if !(quad_tol >= 1e-12) {
        return Err(Error::Argument(format!("quad_tol = {quad_tol} must be >= 1e-12")));
    }
    let al = p.alpha();
    let k = al / (al - 1.0);
    let e = (n as f64 - 1.0) * p.lt_index();
    let ratio = a / b;
    let x = 1.0 - ratio;
    let w0 = ratio.powf(1.0 / k);
    let ln_x = (-ratio).ln_1p();
    let integrand = |w: f64| {
        let one_minus = 1.0 - w.powf(k);
        if one_minus <= 0.0 {
            0.0
        } else {
            k * (e * (one_minus.ln() - ln_x)).exp()
        }
    };
    let r = quad::integrate(integrand, w0, 1.0, quad_tol, 0.0, 2000)?;
    if !(r.value > 0.0) {
        return Err(Error::Quadrature { value: r.value, achieved: r.abs_error, requested: quad_tol });
    }
    let _ = x;
    Ok(LnMoment { ln_value: e * ln_x + r.value.ln(), rel_error: r.abs_error / r.value })
}

/// ln E|L_b − L_a|^n for 0 < a ≤ b through the incomplete Beta integral.
pub fn ln_lt_moment_interval(p: &StableParams, n: u32, a: f64, b: f64, quad_tol: f64) -> Result<LnMoment> {
    if n == 0 {
        check_positive_interval(a, b)?;
        return Ok(LnMoment { ln_value: 0.0, rel_error: 0.0 });
    }
    let f = ln_incomplete_beta_f(p, n, a, b, quad_tol)?;
    let g = p.lt_index();
    let nf = n as f64;
    let ln = ln_factorial(nf) + nf * ln_c_alpha(p) + (nf - 1.0) * ln_gamma(g)
        - ln_gamma(1.0 + (nf - 1.0) * g)
        + nf * g * b.ln()
        + f.ln_value;
    Ok(LnMoment { ln_value: ln, rel_error: f.rel_error })
}

pub fn lt_moment_interval(p: &StableParams, n: u32, a: f64, b: f64, quad_tol: f64) -> Result<f64> {
    if a == b {
        check_positive_interval(a, b)?;
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    Ok(ln_lt_moment_interval(p, n, a, b, quad_tol)?.ln_value.exp())
}

/// Jensen sandwich for a non-integer moment E Δ^γ from the neighbouring
/// integer moments: `(E Δ^⌊γ⌋)^{γ/⌊γ⌋} ≤ E Δ^γ ≤ (E Δ^{⌊γ⌋+1})^{γ/(⌊γ⌋+1)}`.
///
/// Works on logs; `ln_int_moment(k)` returns ln E Δ^k. For γ < 1 the lower
/// side is unavailable and returned as −∞.
pub fn ln_jensen_sandwich<F: FnMut(u32) -> Result<f64>>(gamma: f64, mut ln_int_moment: F) -> Result<(f64, f64)> {
    if !(gamma >= 0.0) {
        return Err(Error::Argument(format!("order {gamma} must be nonnegative")));
    }
    let fl = gamma.floor();
    let lower = if fl >= 1.0 {
        gamma / fl * ln_int_moment(fl as u32)?
    } else {
        f64::NEG_INFINITY
    };
    let upper = gamma / (fl + 1.0) * ln_int_moment(fl as u32 + 1)?;
    Ok((lower, upper))
}

/// E|W^H(1)|^q = 2^{q/2} Γ((q+1)/2)/√π. The Hurst index does not enter
/// because W^H(1) is standard normal.
pub fn fbm_abs_moment(_hurst: f64, q: f64) -> f64 {
    ln_fbm_abs_moment(q).exp()
}

pub fn ln_fbm_abs_moment(q: f64) -> f64 {
    debug_assert!(q >= 0.0);
    q / 2.0 * 2f64.ln() + ln_gamma((q + 1.0) / 2.0) - 0.5 * PI.ln()
}

/// E|W^H(L_b)|^{n/H}, as the product of the Gaussian moment and the
/// local-time moment (the two are independent).
pub fn z_moment_exact(m: &ModelParams, n: u32, b: f64) -> f64 {
    let h = m.hurst();
    fbm_abs_moment(h, n as f64 / h) * lt_moment_exact(m.stable(), n as f64, b)
}

/// Bounds C₁(n)(b−a)^{n(1−1/α)} ≤ E|Z(b) − Z(a)|^{n/H} ≤ C₂(n)(b−a)^{n(1−1/α)}.
pub fn z_moment_bounds(m: &ModelParams, n: u32, a: f64, b: f64) -> Result<(f64, f64)> {
    check_positive_interval(a, b)?;
    if a == b {
        return Ok((0.0, 0.0));
    }
    let al = m.alpha();
    let h = m.hurst();
    let g = m.stable().lt_index();
    let nf = n as f64;
    let common = -0.5 * PI.ln()
        + ((b - a) / b).ln() / al
        + nf * (2f64.ln() / (2.0 * h) + ln_a1(m.stable()))
        + ln_factorial(nf)
        + ln_gamma(nf / (2.0 * h) + 0.5)
        + nf * g * (b - a).ln();
    let c1 = common - ln_gamma(g) - ln_gamma(1.0 + 1.0 / al + nf * g);
    let c2 = common - ln_gamma(1.0 + nf * g);
    Ok((c1.exp(), c2.exp()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    /// Distance from the target set in standard errors (0 when inside).
    pub margin_se: f64,
}

impl Verdict {
    pub fn from_distance(distance: f64, stderr: f64, allowed_se: f64) -> Self {
        let margin_se = if distance <= 0.0 {
            0.0
        } else if stderr > 0.0 {
            distance / stderr
        } else {
            f64::INFINITY
        };
        Verdict { pass: margin_se <= allowed_se, margin_se }
    }
}

/// A Monte Carlo moment estimate confronted with its closed-form target or bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub order: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub target_exact: Option<f64>,
    pub bound_lower: Option<f64>,
    pub bound_upper: Option<f64>,
    pub verdict: Verdict,
}

impl MomentReport {
    pub fn against_exact(order: f64, estimate: f64, stderr: f64, target: f64, allowed_se: f64) -> Self {
        let verdict = Verdict::from_distance((estimate - target).abs(), stderr, allowed_se);
        Self { order, estimate, stderr, target_exact: Some(target), bound_lower: None, bound_upper: None, verdict }
    }

    pub fn against_bounds(order: f64, estimate: f64, stderr: f64, lower: f64, upper: f64, allowed_se: f64) -> Self {
        assert!(lower <= upper, "bounds out of order: {lower} > {upper}");
        let distance = (lower - estimate).max(estimate - upper).max(0.0);
        let verdict = Verdict::from_distance(distance, stderr, allowed_se);
        Self {
            order,
            estimate,
            stderr,
            target_exact: None,
            bound_lower: Some(lower),
            bound_upper: Some(upper),
            verdict,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bm() -> StableParams {
        StableParams::brownian()
    }

    #[test]
    fn brownian_local_time_moments_are_half_normal() {
        // L₁ = |N| in law
        assert_relative_eq!(lt_moment_exact(&bm(), 1.0, 1.0), (2.0 / PI).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(lt_moment_exact(&bm(), 2.0, 1.0), 1.0, max_relative = 1e-14);
        assert_relative_eq!(lt_moment_exact(&bm(), 4.0, 1.0), 3.0, max_relative = 1e-13);
        let p = StableParams::new(1.3, 0.2, 0.5).unwrap();
        assert_eq!(lt_moment_exact(&p, 0.0, 7.0), 1.0);
    }

    #[test]
    fn bounds_ratio_below_one() {
        for al in [1.1, 1.3, 1.5, 1.8, 2.0] {
            let p = StableParams::new(al, 0.0, 1.0).unwrap();
            for n in 1..=12 {
                let (lo, hi) = lt_moment_bounds(&p, n, 0.7, 2.0).unwrap();
                let g = 1.0 - 1.0 / al;
                let nf = n as f64;
                let ratio = (ln_gamma(1.0 + nf * g) - ln_gamma(g) - ln_gamma(1.0 + 1.0 / al + nf * g)).exp();
                assert_relative_eq!(lo / hi, ratio, max_relative = 1e-12);
                assert!(ratio < 1.0);
            }
        }
    }

    #[test]
    fn bounds_vanish_as_interval_shrinks() {
        let p = StableParams::new(1.5, 0.0, 1.0).unwrap();
        let (lo, hi) = lt_moment_bounds(&p, 2, 1.0 - 1e-10, 1.0).unwrap();
        assert!(lo < 1e-8 && hi < 1e-8);
        assert!(lt_moment_bounds(&p, 2, 0.0, 1.0).is_err());
        assert!(lt_moment_bounds(&p, 2, 1.5, 1.0).is_err());
    }

    #[test]
    fn interval_moment_matches_oracles() {
        // tests/oracles/closed_forms.py
        let v = lt_moment_interval(&bm(), 1, 1.0, 2.0, 1e-12).unwrap();
        assert_relative_eq!(v, 0.330_494_606_292_647_22, max_relative = 1e-10);
        // E L₂ − E L₁ for Brownian local time
        assert_relative_eq!(v, (2.0 / PI).sqrt() * (2f64.sqrt() - 1.0), max_relative = 1e-10);
        let p = StableParams::new(1.5, 0.0, 1.0).unwrap();
        let v3 = lt_moment_interval(&p, 3, 1.0, 2.0, 1e-12).unwrap();
        assert_relative_eq!(v3, 0.559_323_280_114_399_61, max_relative = 1e-10);
    }

    #[test]
    fn interval_moment_limit_at_zero_start() {
        for al in [1.2, 1.5, 1.8, 2.0] {
            let p = StableParams::new(al, 0.0, 1.0).unwrap();
            for n in [1u32, 2, 5, 9] {
                let v = lt_moment_interval(&p, n, 1e-60, 1.3, 1e-12).unwrap();
                let exact = lt_moment_exact(&p, n as f64, 1.3);
                assert_relative_eq!(v, exact, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn interval_moment_inside_bounds() {
        for al in [1.2, 1.5, 1.8, 2.0] {
            let p = StableParams::new(al, 0.3, 1.4).unwrap();
            for n in 1..=6 {
                for (a, b) in [(0.1, 1.0), (1.0, 2.0), (3.0, 3.5)] {
                    let v = lt_moment_interval(&p, n, a, b, 1e-10).unwrap();
                    let (lo, hi) = lt_moment_bounds(&p, n, a, b).unwrap();
                    assert!(lo <= v * (1.0 + 1e-10) && v <= hi * (1.0 + 1e-10), "{al} {n} {a} {b}");
                }
            }
        }
    }

    #[test]
    fn interval_moment_large_order_stays_finite() {
        let p = StableParams::new(2.0, 0.0, 2.0).unwrap();
        let r = ln_lt_moment_interval(&p, 800, 0.5, 1.5, 1e-10).unwrap();
        assert!(r.ln_value.is_finite());
        assert!(r.rel_error <= 1e-10);
        assert!(ln_incomplete_beta_f(&p, 3, 1.0, 2.0, 1e-13).is_err());
    }

    #[test]
    fn jensen_sandwich_contains_continuation() {
        for al in [1.2, 1.5, 1.8, 2.0] {
            let p = StableParams::new(al, 0.0, 1.0).unwrap();
            for i in 1..200 {
                let q = i as f64 * 0.1;
                if q.fract() == 0.0 {
                    continue;
                }
                let (lo, hi) =
                    ln_jensen_sandwich(q, |k| Ok(ln_lt_moment_exact(&p, k as f64, 1.0))).unwrap();
                let v = ln_lt_moment_exact(&p, q, 1.0);
                assert!(lo <= v + 1e-12 && v <= hi + 1e-12, "alpha {al} q {q}: {lo} {v} {hi}");
            }
        }
    }

    #[test]
    fn gaussian_absolute_moments() {
        assert_relative_eq!(fbm_abs_moment(0.3, 2.0), 1.0, max_relative = 1e-14);
        assert_relative_eq!(fbm_abs_moment(0.3, 1.0), (2.0 / PI).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(fbm_abs_moment(0.3, 0.0), 1.0, max_relative = 1e-15);
        assert_relative_eq!(fbm_abs_moment(0.7, 4.0), 3.0, max_relative = 1e-14);
    }

    #[test]
    fn z_moment_anchor_and_closed_form() {
        let m = ModelParams::gaussian_anchor();
        assert_relative_eq!(z_moment_exact(&m, 1, 1.0), (2.0 / PI).sqrt(), max_relative = 1e-14);
        let m = ModelParams::from_parts(1.6, 0.2, 0.8, 0.35).unwrap();
        for n in 1..=8u32 {
            let nf = n as f64;
            let h = m.hurst();
            let direct = (-0.5 * PI.ln()
                + nf * (2f64.ln() / (2.0 * h) + ln_a1(m.stable()))
                + ln_factorial(nf)
                + ln_gamma(nf / (2.0 * h) + 0.5)
                - ln_gamma(1.0 + nf * m.stable().lt_index())
                + nf * m.stable().lt_index() * 2.5f64.ln())
            .exp();
            assert_relative_eq!(z_moment_exact(&m, n, 2.5), direct, max_relative = 1e-12);
            let r = z_moment_exact(&m, n, 2.5) / z_moment_exact(&m, n, 1.0);
            assert_relative_eq!(r, 2.5f64.powf(nf * m.stable().lt_index()), max_relative = 1e-12);
        }
    }

    #[test]
    fn z_bounds_factor_through_local_time() {
        let m = ModelParams::from_parts(1.5, 0.0, 1.0, 0.4).unwrap();
        for n in 1..=6 {
            let (c1, c2) = z_moment_bounds(&m, n, 1.0, 2.0).unwrap();
            let (l1, l2) = lt_moment_bounds(m.stable(), n, 1.0, 2.0).unwrap();
            let g = fbm_abs_moment(0.4, n as f64 / 0.4);
            assert_relative_eq!(c1, g * l1, max_relative = 1e-12);
            assert_relative_eq!(c2, g * l2, max_relative = 1e-12);
            let mid = g * lt_moment_interval(m.stable(), n, 1.0, 2.0, 1e-10).unwrap();
            assert!(c1 <= mid && mid <= c2);
        }
    }

    #[test]
    fn moment_report_verdicts() {
        let r = MomentReport::against_exact(1.0, 0.80, 0.01, 0.7979, 3.0);
        assert!(r.verdict.pass);
        let r = MomentReport::against_exact(1.0, 0.90, 0.01, 0.7979, 3.0);
        assert!(!r.verdict.pass);
        assert!(r.verdict.margin_se > 10.0);
        let r = MomentReport::against_bounds(2.0, 1.0, 0.1, 0.5, 0.9, 3.0);
        assert!(r.verdict.pass);
        assert_relative_eq!(r.verdict.margin_se, 1.0, max_relative = 1e-12);
    }
}
