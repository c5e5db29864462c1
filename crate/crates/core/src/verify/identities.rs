//! Deterministic checks: closed-form identities, the β-invariance of the
//! Davies inversion, the Gaussian anchor, and Valiron recovery on series
//! with known growth.

use std::f64::consts::SQRT_2;
use std::time::Instant;

use serde_json::json;

use super::{CampaignResult, Statistic};
use crate::growth::{
    estimate_growth, g_beta_growth, lt_mgf_growth, m1_oracle, m1_type, valiron_type, CoefficientOracle,
};
use crate::model::{
    a1, b3_and_rho, c_alpha, davies_inversion, growth_constant_b1, legendre_numeric, lt_constant, lt_ldp_constant,
    tail_constant_b2, ModelParams, RateFunctionSpec,
};
use crate::special::gamma;
use crate::Result;

/// The (α, H, ν) grid shared by the identity checks: 5 × 5 × 3 points, all
/// with 2H < α so that every rate function exists.
pub(crate) fn identity_grid() -> Vec<ModelParams> {
    let alphas = [1.2, 1.4, 1.6, 1.8, 2.0];
    let hursts = [0.1, 0.2, 0.3, 0.4, 0.5];
    let nus = [-0.6, 0.0, 0.6];
    let mut out = Vec::with_capacity(75);
    for &a in &alphas {
        for &h in &hursts {
            for &nu in &nus {
                out.push(ModelParams::from_parts(a, nu, 1.3, h).expect("grid point is valid"));
            }
        }
    }
    out
}

fn ulps(a: f64, b: f64) -> f64 {
    (a - b).abs() / (f64::EPSILON * a.abs().max(b.abs()))
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

/// A₁ = Γ(1−1/α)C(α); C(α,ν,χ) = A₁^(α/(α−1)); Λ₁* against a numerical
/// Legendre transform of Λ₁ on x ∈ [0.1, 10]; Λ₁*(x) = B₂(0,1) x^(2α/(α+2H)).
pub fn closed_form_identities() -> Result<CampaignResult> {
    let start = Instant::now();
    let grid = identity_grid();
    let xs = [0.1, 0.3, 1.0, 3.0, 10.0];
    let (mut ulp_a1, mut rel_c, mut rel_leg, mut rel_b2) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for m in &grid {
        let p = m.stable();
        let al = p.alpha();
        ulp_a1 = ulp_a1.max(ulps(a1(p), gamma(1.0 - 1.0 / al) * c_alpha(p)));
        rel_c = rel_c.max(rel(lt_constant(p), a1(p).powf(al / (al - 1.0))));
        let l1 = RateFunctionSpec::lambda1(m)?;
        let l1s = RateFunctionSpec::lambda1_star(m)?;
        let b2 = tail_constant_b2(m, 0.0, 1.0)?;
        let q = l1.exponent;
        for &x in &xs {
            let closed = l1s.eval(x).to_f64();
            // the maximizer solves x = q B₁ θ^(q−1)
            let theta_star = (x / (q * l1.prefactor)).powf(1.0 / (q - 1.0));
            let hi = 2.0 * theta_star + 1.0;
            let numeric = legendre_numeric(&l1, x, -hi, hi, 4001)?;
            rel_leg = rel_leg.max(rel(numeric, closed));
            rel_b2 = rel_b2.max(rel(b2 * x.powf(m.tail_exponent()), closed));
        }
    }
    let mut c = CampaignResult::new("closed_form_identities", json!({ "grid_points": grid.len(), "x": xs }), grid.len());
    c.push(Statistic::at_most("max_ulp_a1_gamma_c", ulp_a1, 4.0));
    c.push(Statistic::at_most("max_rel_c_vs_a1_power", rel_c, 1e-12));
    c.push(Statistic::at_most("max_rel_legendre", rel_leg, 1e-6));
    c.push(Statistic::at_most("max_rel_lambda1_star_vs_b2", rel_b2, 1e-10));
    Ok(c.finish(start))
}

/// `davies_inversion(b3_and_rho(β))` gives the same tail exponent and
/// constant B₂ for every admissible β.
pub fn davies_invariance() -> Result<CampaignResult> {
    let start = Instant::now();
    let grid = identity_grid();
    let intervals = [(0.0, 1.0), (0.5, 2.0)];
    let (mut rel_exp, mut rel_const) = (0.0f64, 0.0f64);
    let mut count = 0;
    for m in &grid {
        for &(a, b) in &intervals {
            let b2 = tail_constant_b2(m, a, b)?;
            for frac in [0.25, 0.5, 0.9] {
                let beta = frac * m.beta_threshold();
                let g = b3_and_rho(m, beta, a, b)?;
                let d = davies_inversion(g.rho, g.b3, beta)?;
                rel_exp = rel_exp.max(rel(d.tail_exponent, m.tail_exponent()));
                rel_const = rel_const.max(rel(d.tail_constant, b2));
                count += 1;
            }
        }
    }
    let mut c = CampaignResult::new(
        "davies_invariance",
        json!({ "grid_points": grid.len(), "intervals": intervals, "beta_fractions": [0.25, 0.5, 0.9] }),
        count,
    );
    c.push(Statistic::at_most("max_rel_tail_exponent", rel_exp, 1e-10));
    c.push(Statistic::at_most("max_rel_tail_constant", rel_const, 1e-10));
    Ok(c.finish(start))
}

/// At α = 2, ν = 0, χ = 2, H = 1/2 the process is Brownian motion run by
/// Brownian local time, `L_1 ~ |N|`, `Z(1) ~ |N|^(1/2) N'`, and every
/// constant has an elementary value.
pub fn gaussian_anchor_constants() -> Result<CampaignResult> {
    let start = Instant::now();
    let m = ModelParams::gaussian_anchor();
    let p = m.stable();
    let mut c = CampaignResult::new("gaussian_anchor", serde_json::to_value(m)?, 1);
    let tol = 1e-10;
    // S_1 = 1/(2N²) for the 1/2-stable subordinator, so L_1 = A₁√2|N|; for
    // standard Brownian motion L_1 ~ |N|.
    c.push(Statistic::relative("A1", a1(p), None, 1.0 / SQRT_2, tol));
    // E exp(θ Z(t)) = E exp(θ² t |N| / 2) ~ exp((θ²t/2)²/2): Λ₁(θ) = θ⁴/8.
    let s_coef: f64 = 0.5;
    c.push(Statistic::relative("B1", growth_constant_b1(&m)?, None, s_coef * s_coef / 2.0, tol));
    // |Z(1)| = |N|^(1/2)|N'|: conditioning on N, E exp(t|Z(1)|) ~ E exp(t²|N|/2) ~ exp(t⁴/8).
    let g = b3_and_rho(&m, 1.0, 0.0, 1.0)?;
    c.push(Statistic::relative("B3_beta1", g.b3, None, 0.125, tol));
    c.push(Statistic::relative("rho_beta1", g.rho, None, 4.0, tol));
    // E exp(θ|N|) ~ exp(θ²/2): C = 1/2.
    c.push(Statistic::relative("lt_ldp_constant", lt_ldp_constant(p, 0.0, 1.0)?, None, 0.5, tol));
    // Legendre transform of θ⁴/8: sup θx − θ⁴/8 at θ³ = 2x gives (3/4)(2x)^(1/3)·x = (3/4)2^(1/3) x^(4/3).
    c.push(Statistic::relative("tail_exponent", m.tail_exponent(), None, 4.0 / 3.0, tol));
    c.push(Statistic::relative("B2", tail_constant_b2(&m, 0.0, 1.0)?, None, 0.75 * 2f64.powf(1.0 / 3.0), tol));
    Ok(c.finish(start))
}

/// Valiron order and type recovered from coefficients alone.
pub fn valiron_recovery() -> Result<CampaignResult> {
    let start = Instant::now();
    let mut c = CampaignResult::new(
        "valiron_recovery",
        json!({ "p_max_reference": 400, "p_max_model": 800 }),
        0,
    );
    // e^z: order 1 type 1; e^{z²}: order 2 type 1.
    for (name, oracle, rho) in [("exp", CoefficientOracle::exp(), 1.0), ("exp_z2", CoefficientOracle::exp_power(2), 2.0)] {
        let g = estimate_growth(&oracle, 400)?;
        c.push(Statistic::relative(&format!("{name}_order"), g.order_rho, None, rho, 0.02));
        c.push(Statistic::relative(&format!("{name}_type"), g.type_b, None, 1.0, 0.04));
    }

    let m1 = ModelParams::from_parts(2.0, 0.0, 2.0, 0.25)?;
    let rho1 = m1.mgf_exponent().expect("2H < alpha") / 2.0;
    let g = valiron_type(&m1_oracle(&m1), rho1, 800)?;
    c.push(Statistic::relative("m1_type", g.type_b, None, m1_type(&m1)?, 0.03));
    c.push(Statistic::compare("m1_order", g.order_rho, None, rho1));

    let anchor = ModelParams::gaussian_anchor();
    let target = b3_and_rho(&anchor, 1.0, 0.0, 1.0)?;
    let g = g_beta_growth(&anchor, 1.0, 0.0, 1.0, 800)?;
    c.push(Statistic::relative("g_beta_order", g.order_rho, None, target.rho, 0.05));
    c.push(Statistic::relative("g_beta_type", g.type_b, None, target.b3, 0.05));

    let p = anchor.stable();
    let g = lt_mgf_growth(p, 0.0, 1.0, 800)?;
    let al = p.alpha();
    c.push(Statistic::relative("lt_mgf_order", g.order_rho, None, al / (al - 1.0), 0.05));
    c.push(Statistic::relative("lt_mgf_type", g.type_b, None, lt_ldp_constant(p, 0.0, 1.0)?, 0.05));
    Ok(c.finish(start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StableParams;

    #[test]
    fn grid_has_75_valid_points() {
        let g = identity_grid();
        assert_eq!(g.len(), 75);
        assert!(g.iter().all(|m| m.ldp_valid()));
    }

    #[test]
    fn identities_hold() {
        let c = closed_form_identities().unwrap();
        assert!(c.pass, "{:?}", c.failures());
    }

    #[test]
    fn davies_is_beta_invariant() {
        let c = davies_invariance().unwrap();
        assert!(c.pass, "{:?}", c.failures());
    }

    #[test]
    fn anchor_constants() {
        let c = gaussian_anchor_constants().unwrap();
        assert!(c.pass, "{:?}", c.failures());
        assert_eq!(c.stats.len(), 7);
    }

    #[test]
    fn c_uses_its_own_stable_params() {
        // lt_constant depends on (α, ν, χ) only through A₁
        let p = StableParams::new(1.5, 0.3, 2.0).unwrap();
        assert!(rel(lt_constant(&p), a1(&p).powf(3.0)) < 1e-13);
    }
}
