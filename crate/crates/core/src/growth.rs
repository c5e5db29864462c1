//! Order and type of entire functions from their Taylor coefficients, and
//! the moment-generating-function limits that follow from them.
//!
//! For `f(z) = Σ c_p z^p` of order ρ and type B the coefficients satisfy
//! `−log c_p / p = (1/ρ) log p − (1/ρ)(log(ρB) + 1) + O(log p / p)`, and the
//! Valiron statistic `(1/(ρe)) p c_p^(ρ/p)` tends to B. Both limits are
//! approached at rate `log p / p`, far too slowly for plain tail averages at
//! p ≈ 10³. The estimators here fit that correction explicitly over the
//! upper half of the support; the last-quartile median and oscillation are
//! still reported as diagnostics.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::model::{
    b3_and_rho, ln_fbm_abs_moment, ln_jensen_sandwich, ln_lt_moment_exact, ln_lt_moment_interval, ModelParams,
    StableParams,
};
use crate::special::{ln_factorial, log_sum_exp};
use crate::stats::{least_squares, median};
use crate::{io, Error, Result};

/// Default largest coefficient index.
pub const DEFAULT_P_MAX: usize = 800;

/// Quadrature tolerance for interval moments feeding coefficient oracles.
const QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportPattern {
    /// Every p ≥ 1.
    All,
    /// `p = ⌊n/h⌋` for n ≥ 1.
    Lacunary { h: f64 },
}

impl SupportPattern {
    /// Support indices in `[1, p_max]`.
    pub fn indices(&self, p_max: usize) -> Vec<usize> {
        match *self {
            SupportPattern::All => (1..=p_max).collect(),
            SupportPattern::Lacunary { h } => {
                let mut v = Vec::new();
                for n in 1.. {
                    let p = (n as f64 / h).floor() as usize;
                    if p > p_max {
                        break;
                    }
                    if v.last() != Some(&p) {
                        v.push(p);
                    }
                }
                v
            }
        }
    }

    /// Largest gap between consecutive support indices.
    pub fn max_gap(&self) -> usize {
        match *self {
            SupportPattern::All => 1,
            SupportPattern::Lacunary { h } => (1.0 / h).ceil() as usize,
        }
    }
}

/// `p ↦ log c_p` on a declared support (−∞ off the support). Evaluation is
/// pure; oracles needing expensive tables precompute them at construction.
#[derive(Clone)]
pub struct CoefficientOracle {
    name: String,
    support: SupportPattern,
    log_c: Arc<dyn Fn(usize) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for CoefficientOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoefficientOracle").field("name", &self.name).field("support", &self.support).finish()
    }
}

impl CoefficientOracle {
    pub fn new<F: Fn(usize) -> f64 + Send + Sync + 'static>(name: &str, support: SupportPattern, log_c: F) -> Self {
        Self { name: name.into(), support, log_c: Arc::new(log_c) }
    }

    /// `e^z`: `c_p = 1/p!`.
    pub fn exp() -> Self {
        Self::new("exp(z)", SupportPattern::All, |p| -ln_factorial(p as f64))
    }

    /// `e^(z^k)`: `c_(kn) = 1/n!`, zero elsewhere.
    pub fn exp_power(k: usize) -> Self {
        assert!(k >= 1);
        Self::new(&format!("exp(z^{k})"), SupportPattern::Lacunary { h: 1.0 / k as f64 }, move |p| {
            if p % k == 0 {
                -ln_factorial((p / k) as f64)
            } else {
                f64::NEG_INFINITY
            }
        })
    }

    /// Coefficients of `f(kz)`: `c_p k^p`.
    pub fn scaled(&self, k: f64) -> Self {
        let inner = self.log_c.clone();
        let lk = k.ln();
        Self::new(&format!("{}(scaled {k})", self.name), self.support, move |p| inner(p) + p as f64 * lk)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn support(&self) -> SupportPattern {
        self.support
    }

    pub fn log_c(&self, p: usize) -> f64 {
        (self.log_c)(p)
    }

    /// Finite support points `(p, log c_p)` with 1 ≤ p ≤ p_max.
    pub fn points(&self, p_max: usize) -> Vec<(usize, f64)> {
        self.support
            .indices(p_max)
            .into_iter()
            .map(|p| (p, self.log_c(p)))
            .filter(|(_, l)| l.is_finite())
            .collect()
    }
}

/// `log Σ c_p r^p` with the index at which summation stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesSum {
    pub log_value: f64,
    pub truncation_index: usize,
}

/// Hard cap on the number of support points visited by [`series_log_sum`].
const SERIES_CAP: usize = 50_000_000;

/// Log-space summation, stopped once the terms decrease geometrically and
/// the dominated tail falls below `tol` times the running sum.
///
/// Includes the constant term `c_0 = 1` when p = 0 is not on the support,
/// as for every moment generating function.
pub fn series_log_sum(oracle: &CoefficientOracle, r: f64, tol: f64) -> Result<SeriesSum> {
    if !(r > 0.0) {
        return Err(Error::Argument(format!("r = {r} must be positive")));
    }
    let lr = r.ln();
    let mut acc = 0.0f64; // log of the running sum, starting with c_0 = 1
    let mut prev: Option<(usize, f64)> = None;
    let mut n = 1usize;
    let step = |n: usize| -> usize {
        match oracle.support {
            SupportPattern::All => n,
            SupportPattern::Lacunary { h } => (n as f64 / h).floor() as usize,
        }
    };
    let mut last_p = 0usize;
    loop {
        let p = step(n);
        n += 1;
        if p == last_p {
            continue;
        }
        last_p = p;
        if n > SERIES_CAP {
            return Err(Error::NonConvergence(format!(
                "{}: series at r = {r} not summed after {SERIES_CAP} terms (radius of convergence <= r?)",
                oracle.name
            )));
        }
        let lc = oracle.log_c(p);
        if !lc.is_finite() {
            continue;
        }
        let term = lc + p as f64 * lr;
        acc = log_sum_exp(&[acc, term]);
        if let Some((pp, pt)) = prev {
            // per-index log ratio of consecutive terms
            let log_q = (term - pt) / (p - pp) as f64;
            if log_q < 0.0 {
                // Past the peak the per-index ratio keeps falling, so the
                // remaining terms are dominated by term · Σ_{j≥1} q^j.
                let q = log_q.exp();
                let tail = term + (q / (1.0 - q)).ln();
                if tail - acc < tol.ln() {
                    return Ok(SeriesSum { log_value: acc, truncation_index: p });
                }
            }
        }
        prev = Some((p, term));
    }
}

/// One row of the coefficient diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagPoint {
    pub p: usize,
    pub log_c: f64,
    pub valiron_stat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    /// Order from the coefficient regression.
    pub order_rho: f64,
    /// Type at `rho_used`, extrapolated from the Valiron statistic.
    pub type_b: f64,
    pub rho_used: f64,
    /// Type implied by the joint (order, type) regression.
    pub joint_type: f64,
    /// Median of the Valiron statistic over the last quartile of the support.
    pub tail_median: f64,
    /// `(max − min)/median` of the statistic over the last quartile.
    pub oscillation: f64,
    pub converged: bool,
    /// Largest `stat/type_b − 1` beyond the first decile of support points.
    pub sup_excess: f64,
    /// Range of B̂ over the bracketing coefficient oracles, when bracketed.
    pub type_bracket: Option<(f64, f64)>,
    pub diag: Vec<DiagPoint>,
}

impl GrowthEstimate {
    pub fn write_diag_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<Vec<f64>> = self.diag.iter().map(|d| vec![d.p as f64, d.log_c, d.valiron_stat]).collect();
        io::write_csv(path, &["p", "log_c", "valiron_stat"], &rows)
    }
}

/// Oscillation tolerance on the last quartile for `converged`.
pub const OSCILLATION_TOL: f64 = 0.05;

const MIN_SUPPORT: usize = 50;

fn tail_half(points: &[(usize, f64)], p_max: usize) -> Result<Vec<(usize, f64)>> {
    if points.len() < MIN_SUPPORT {
        return Err(Error::InsufficientData(format!(
            "{} finite coefficients up to p = {p_max}; need at least {MIN_SUPPORT}",
            points.len()
        )));
    }
    Ok(points.iter().copied().filter(|(p, _)| 2 * p >= p_max).collect())
}

/// `(ρ̂, B̂)` from regressing `−log c_p / p` on `{log p, 1, log p/p, 1/p}`.
fn order_regression(oracle: &CoefficientOracle, p_max: usize) -> Result<(f64, f64)> {
    let pts = tail_half(&oracle.points(p_max), p_max)?;
    let rows: Vec<Vec<f64>> = pts
        .iter()
        .map(|&(p, _)| {
            let (pf, lp) = (p as f64, (p as f64).ln());
            vec![lp, 1.0, lp / pf, 1.0 / pf]
        })
        .collect();
    let y: Vec<f64> = pts.iter().map(|&(p, l)| -l / p as f64).collect();
    let fit = least_squares(&rows, &y, None)?;
    let slope = fit.coef[0];
    if !(slope > 1e-3) {
        return Err(Error::NonConvergence(format!(
            "{}: coefficient decay slope {slope:.3e} — not an entire function of finite order",
            oracle.name
        )));
    }
    let rho = 1.0 / slope;
    let b = (-rho * fit.coef[1] - 1.0).exp() / rho;
    Ok((rho, b))
}

/// Order ρ̂ from the coefficient decay.
pub fn valiron_order(oracle: &CoefficientOracle, p_max: usize) -> Result<f64> {
    Ok(order_regression(oracle, p_max)?.0)
}

fn valiron_stat(p: usize, log_c: f64, rho: f64) -> f64 {
    (p as f64 * (rho * log_c / p as f64).exp()) / (rho * std::f64::consts::E)
}

/// Type at order `rho`, with convergence and sup-condition diagnostics.
pub fn valiron_type(oracle: &CoefficientOracle, rho: f64, p_max: usize) -> Result<GrowthEstimate> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Argument(format!("order {rho} must be positive")));
    }
    let pts = oracle.points(p_max);
    let half = tail_half(&pts, p_max)?;
    let diag: Vec<DiagPoint> =
        pts.iter().map(|&(p, l)| DiagPoint { p, log_c: l, valiron_stat: valiron_stat(p, l, rho) }).collect();

    // log stat = log B + (a log p + b)/p + …
    let rows: Vec<Vec<f64>> = half
        .iter()
        .map(|&(p, _)| {
            let (pf, lp) = (p as f64, (p as f64).ln());
            vec![1.0, lp / pf, 1.0 / pf]
        })
        .collect();
    let y: Vec<f64> = half.iter().map(|&(p, l)| valiron_stat(p, l, rho).ln()).collect();
    let fit = least_squares(&rows, &y, None)?;
    let type_b = fit.coef[0].exp();

    let q0 = diag.len() * 3 / 4;
    let last: Vec<f64> = diag[q0..].iter().map(|d| d.valiron_stat).collect();
    let tail_median = median(&last);
    let (lo, hi) = last.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let oscillation = (hi - lo) / tail_median;
    let d0 = diag.len() / 10;
    let sup_excess =
        diag[d0..].iter().map(|d| d.valiron_stat / type_b - 1.0).fold(f64::NEG_INFINITY, f64::max);
    let (order_rho, joint_type) = order_regression(oracle, p_max)?;
    Ok(GrowthEstimate {
        order_rho,
        type_b,
        rho_used: rho,
        joint_type,
        tail_median,
        oscillation,
        converged: oscillation < OSCILLATION_TOL,
        sup_excess,
        type_bracket: None,
        diag,
    })
}

/// Order and type, with the type evaluated at the estimated order.
pub fn estimate_growth(oracle: &CoefficientOracle, p_max: usize) -> Result<GrowthEstimate> {
    let rho = valiron_order(oracle, p_max)?;
    valiron_type(oracle, rho, p_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analyticity {
    /// `E exp(t|ΔZ|^β)` is entire in t.
    Entire,
    /// Analytic on `(−∞, δ₀)` for some δ₀ > 0.
    FiniteAbscissa,
    /// Infinite for every t > 0.
    NowhereFinite,
}

/// Classification of `t ↦ E exp(t|Z(b) − Z(a)|^β)` by comparing β with `2α/(2H + α)`.
pub fn analyticity_class(m: &ModelParams, beta: f64) -> Result<Analyticity> {
    if !(beta > 0.0) {
        return Err(Error::Argument(format!("beta = {beta} must be positive")));
    }
    let thr = m.beta_threshold();
    Ok(if (beta - thr).abs() <= 1e-12 * thr {
        Analyticity::FiniteAbscissa
    } else if beta < thr {
        Analyticity::Entire
    } else {
        Analyticity::NowhereFinite
    })
}

/// Coefficients `E(L_1^(2Hn))/n!` of `M₁(r) = E exp(r L_1^(2H))`.
pub fn m1_oracle(m: &ModelParams) -> CoefficientOracle {
    let p = *m.stable();
    let h2 = 2.0 * m.hurst();
    CoefficientOracle::new("M1", SupportPattern::All, move |n| {
        ln_lt_moment_exact(&p, h2 * n as f64, 1.0) - ln_factorial(n as f64)
    })
}

/// Closed-form type of M₁: `(1/ρ₁)(A₁ (2H)^(1/α) / (1−1/α)^(1−1/α))^(2Hρ₁)`.
pub fn m1_type(m: &ModelParams) -> Result<f64> {
    let rho1 = m
        .mgf_exponent()
        .map(|e| e / 2.0)
        .ok_or_else(|| Error::Domain("2H >= alpha: M1 is not entire".into()))?;
    let a = m.alpha();
    let h = m.hurst();
    let g = 1.0 - 1.0 / a;
    let inner = crate::model::a1(m.stable()) * (2.0 * h).powf(1.0 / a) / g.powf(g);
    Ok(inner.powf(2.0 * h * rho1) / rho1)
}

/// Growth of `log E exp(θ Z(t))` in θ: the M₁ estimate mapped through
/// `r = θ² t^(2H(1−1/α)) / 2`, so order doubles and type becomes `B̂ 2^(−ρ₁)`.
pub fn z_logmgf_growth(m: &ModelParams, p_max: usize) -> Result<GrowthEstimate> {
    let rho1 = m.mgf_exponent().map(|e| e / 2.0).ok_or_else(|| {
        Error::Domain(format!(
            "2H = {} >= alpha = {}: E exp(theta Z(t)) is infinite, no large deviation principle",
            2.0 * m.hurst(),
            m.alpha()
        ))
    })?;
    let mut g = valiron_type(&m1_oracle(m), rho1, p_max)?;
    let f = 2f64.powf(-rho1);
    g.type_b *= f;
    g.tail_median *= f;
    g.joint_type *= 2f64.powf(-g.order_rho);
    g.order_rho *= 2.0;
    g.rho_used *= 2.0;
    for d in &mut g.diag {
        d.valiron_stat *= f;
    }
    Ok(g)
}

/// Table of `ln E(L_b − L_a)^k`, k = 0..=k_max, by quadrature.
fn interval_moment_table(p: &StableParams, a: f64, b: f64, k_max: usize) -> Result<Vec<f64>> {
    let mut t = Vec::with_capacity(k_max + 1);
    t.push(0.0);
    for k in 1..=k_max {
        t.push(ln_lt_moment_interval(p, k as u32, a, b, QUAD_TOL)?.ln_value);
    }
    Ok(t)
}

/// Which bracket of the Jensen bridge to use for non-integer interval moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bridge {
    Lower,
    Geometric,
    Upper,
}

fn bridged(table: &[f64], gamma: f64, bridge: Bridge) -> f64 {
    let (lo, hi) = ln_jensen_sandwich(gamma, |k| Ok(table[k as usize])).expect("table covers order");
    if gamma < 1.0 {
        // Only the upper side exists; it is exact at γ = 0 and γ = 1.
        return hi;
    }
    let w = gamma - gamma.floor();
    match bridge {
        Bridge::Lower => lo,
        Bridge::Upper => hi,
        Bridge::Geometric => (1.0 - w) * lo + w * hi,
    }
}

/// Coefficients `E|Z(b) − Z(a)|^(βn) / n!`. For a > 0 the local-time moment of
/// non-integer order βHn is bridged from the integer quadrature moments.
fn g_beta_oracle_with(m: &ModelParams, beta: f64, a: f64, b: f64, p_max: usize, bridge: Bridge) -> Result<CoefficientOracle> {
    let p = *m.stable();
    let h = m.hurst();
    let name = format!("g_beta(beta={beta}, a={a}, b={b})");
    if a == 0.0 {
        return Ok(CoefficientOracle::new(&name, SupportPattern::All, move |n| {
            let nf = n as f64;
            ln_fbm_abs_moment(beta * nf) + ln_lt_moment_exact(&p, beta * h * nf, b) - ln_factorial(nf)
        }));
    }
    let k_max = (beta * h * p_max as f64).floor() as usize + 1;
    let table = Arc::new(interval_moment_table(&p, a, b, k_max)?);
    Ok(CoefficientOracle::new(&name, SupportPattern::All, move |n| {
        let nf = n as f64;
        ln_fbm_abs_moment(beta * nf) + bridged(&table, beta * h * nf, bridge) - ln_factorial(nf)
    }))
}

pub fn g_beta_oracle(m: &ModelParams, beta: f64, a: f64, b: f64, p_max: usize) -> Result<CoefficientOracle> {
    g_beta_oracle_with(m, beta, a, b, p_max, Bridge::Geometric)
}

/// Growth of `t ↦ E exp(t |Z(b) − Z(a)|^β)`, targeting `(ρ, B₃)`.
pub fn g_beta_growth(m: &ModelParams, beta: f64, a: f64, b: f64, p_max: usize) -> Result<GrowthEstimate> {
    let target = b3_and_rho(m, beta, a, b)?;
    let mut g = valiron_type(&g_beta_oracle(m, beta, a, b, p_max)?, target.rho, p_max)?;
    if a > 0.0 {
        let lo = valiron_type(&g_beta_oracle_with(m, beta, a, b, p_max, Bridge::Lower)?, target.rho, p_max)?;
        let hi = valiron_type(&g_beta_oracle_with(m, beta, a, b, p_max, Bridge::Upper)?, target.rho, p_max)?;
        // The bracket sequences carry a floor-induced sawtooth, so their
        // extrapolated types need not straddle the bridged one; report the envelope.
        let v = [lo.type_b, hi.type_b, g.type_b];
        g.type_bracket = Some((v.iter().copied().fold(f64::INFINITY, f64::min), v.iter().copied().fold(0.0, f64::max)));
    }
    Ok(g)
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(a >= 0.0 && a < b && b.is_finite()) {
        return Err(Error::Argument(format!("need 0 <= a < b, got a = {a}, b = {b}")));
    }
    Ok(())
}

/// Coefficients `E(L_b − L_a)^n / n!`.
pub fn lt_mgf_oracle(p: &StableParams, a: f64, b: f64, p_max: usize) -> Result<CoefficientOracle> {
    check_interval(a, b)?;
    let name = format!("lt_mgf(a={a}, b={b})");
    let p = *p;
    if a == 0.0 {
        return Ok(CoefficientOracle::new(&name, SupportPattern::All, move |n| {
            ln_lt_moment_exact(&p, n as f64, b) - ln_factorial(n as f64)
        }));
    }
    let table = Arc::new(interval_moment_table(&p, a, b, p_max)?);
    Ok(CoefficientOracle::new(&name, SupportPattern::All, move |n| {
        table.get(n).copied().unwrap_or(f64::NEG_INFINITY) - ln_factorial(n as f64)
    }))
}

/// Growth of `t ↦ E exp(t (L_b − L_a))`, targeting `(α/(α−1), (b−a) C(α,ν,χ))`.
pub fn lt_mgf_growth(p: &StableParams, a: f64, b: f64, p_max: usize) -> Result<GrowthEstimate> {
    let rho = p.alpha() / (p.alpha() - 1.0);
    valiron_type(&lt_mgf_oracle(p, a, b, p_max)?, rho, p_max)
}
