use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ModelParams, StableParams};
use crate::special::ln_gamma;
use crate::{Error, Result};

/// ln C(α): the constant that turns the time integral of the local-time
/// moments into `n! C(α)^n J_n`.
pub fn ln_c_alpha(p: &StableParams) -> f64 {
    let a = p.alpha();
    let t = p.skew_tan();
    p.chi().ln() / a + ln_gamma(1.0 / a)
        - (PI * a).ln()
        - (1.0 + t * t).ln() / (2.0 * a)
        + (t.atan() / a).cos().ln()
}

pub fn c_alpha(p: &StableParams) -> f64 {
    ln_c_alpha(p).exp()
}

/// A₁ = Γ(1 − 1/α) C(α).
pub fn a1(p: &StableParams) -> f64 {
    crate::special::gamma(1.0 - 1.0 / p.alpha()) * c_alpha(p)
}

pub fn ln_a1(p: &StableParams) -> f64 {
    ln_gamma(1.0 - 1.0 / p.alpha()) + ln_c_alpha(p)
}

/// `ln(H A₁^α / (1 − 1/α)^(α−1))`, the quantity shared by B₁ and B₂.
fn ln_core(m: &ModelParams) -> f64 {
    let a = m.alpha();
    m.hurst().ln() + a * ln_a1(m.stable()) - (a - 1.0) * (1.0 - 1.0 / a).ln()
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(a >= 0.0 && a < b && b.is_finite()) {
        return Err(Error::Argument(format!("need 0 <= a < b, got a = {a}, b = {b}")));
    }
    Ok(())
}

/// B₁, the constant of Λ₁(θ) = B₁ θ^(2α/(α−2H)).
pub fn growth_constant_b1(m: &ModelParams) -> Result<f64> {
    if !m.ldp_valid() {
        return Err(Error::Domain(format!(
            "2H = {} >= alpha = {}: E exp(theta Z(t)) is infinite",
            2.0 * m.hurst(),
            m.alpha()
        )));
    }
    let a = m.alpha();
    let h = m.hurst();
    Ok((a - 2.0 * h) / (2.0 * a) * (2.0 * h / (a - 2.0 * h) * ln_core(m)).exp())
}

/// B₂, the rate constant of `P{|Z(b) − Z(a)| > x}` on the scale x^(2α/(α+2H)).
pub fn tail_constant_b2(m: &ModelParams, a: f64, b: f64) -> Result<f64> {
    check_interval(a, b)?;
    let al = m.alpha();
    let h = m.hurst();
    let ln = -2.0 * h / (al + 2.0 * h) * ln_core(m) - m.interval_exponent() * (b - a).ln();
    Ok((al + 2.0 * h) / (2.0 * al) * ln.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthPair {
    pub rho: f64,
    pub b3: f64,
}

/// Order ρ and type B₃ of `t ↦ E exp(t |Z(b) − Z(a)|^β)`.
pub fn b3_and_rho(m: &ModelParams, beta: f64, a: f64, b: f64) -> Result<GrowthPair> {
    check_interval(a, b)?;
    let thr = m.beta_threshold();
    if !(beta > 0.0) {
        return Err(Error::Argument(format!("beta = {beta} must be positive")));
    }
    if beta >= thr {
        return Err(Error::Domain(format!(
            "beta = {beta} >= 2 alpha/(2H + alpha) = {thr}: the generating function is not entire"
        )));
    }
    let al = m.alpha();
    let h = m.hurst();
    let rho = 2.0 * al / (2.0 * al - al * beta - 2.0 * h * beta);
    let g = 1.0 - 1.0 / al;
    let inner = beta / (2.0 * h) * beta.ln() + beta / al * (beta * h).ln() - beta * g * g.ln();
    let ln_b3 = -rho.ln()
        + beta * h * rho * ln_a1(m.stable())
        + beta * h * rho * g * (b - a).ln()
        + h * rho * inner;
    Ok(GrowthPair { rho, b3: ln_b3.exp() })
}

/// B₃ for H = 1/2, β = 1 on an interval of unit length, in the reduced form
/// `[A₁/2]^(α/(α−1))`.
pub fn b3_brownian_unit(p: &StableParams) -> f64 {
    let a = p.alpha();
    let t = p.skew_tan();
    let base = crate::special::gamma(1.0 - 1.0 / a)
        * crate::special::gamma(1.0 / a)
        * p.chi().powf(1.0 / a)
        * ((1.0 / a) * t.atan()).cos()
        / (2.0 * PI * a * (1.0 + t * t).powf(1.0 / (2.0 * a)));
    base.powf(a / (a - 1.0))
}

/// C(α, ν, χ) = A₁^(α/(α−1)).
pub fn lt_constant(p: &StableParams) -> f64 {
    let a = p.alpha();
    (a / (a - 1.0) * ln_a1(p)).exp()
}

/// `(b − a) C(α, ν, χ)`: the type of `t ↦ E exp(t (L_b − L_a))` of order α/(α−1).
pub fn lt_ldp_constant(p: &StableParams, a: f64, b: f64) -> Result<f64> {
    check_interval(a, b)?;
    Ok((b - a) * lt_constant(p))
}

/// Rate constant of `P{L_b − L_a > x}` on the scale x^α.
pub fn lt_tail_constant(p: &StableParams, a: f64, b: f64) -> Result<f64> {
    let al = p.alpha();
    let c = lt_ldp_constant(p, a, b)?;
    Ok((al / (al - 1.0) * c).powf(-(al - 1.0)) / al)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DaviesTail {
    pub tail_exponent: f64,
    pub tail_constant: f64,
}

/// Converts `log E exp(tY) ~ B₃ t^ρ` for `Y = |X|^β` into
/// `log P{|X| ≥ x} ~ −c x^κ` with κ = βρ/(ρ − 1), c = (1 − 1/ρ)(ρB₃)^(−1/(ρ−1)).
pub fn davies_inversion(rho: f64, b3: f64, beta: f64) -> Result<DaviesTail> {
    if !(rho > 1.0) {
        return Err(Error::Domain(format!("rho = {rho} must exceed 1")));
    }
    if !(b3 > 0.0 && beta > 0.0) {
        return Err(Error::Argument(format!("need b3 > 0 and beta > 0, got {b3}, {beta}")));
    }
    let tail_constant = (1.0 - 1.0 / rho) * (-(rho * b3).ln() / (rho - 1.0)).exp();
    Ok(DaviesTail { tail_exponent: beta * rho / (rho - 1.0), tail_constant })
}
