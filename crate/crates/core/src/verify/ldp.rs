//! Moment generating function and large deviation campaigns.
//!
//! Both use `Z(t) = t^κ L_1^H N` in law (κ = H(1 − 1/α)) and integrate the
//! Gaussian factor analytically: `E[exp(θZ(t)) | L] = exp(θ² t^(2κ) L^(2H)/2)`
//! and `P{Z(t) ≥ y | L} = Φ̄(y t^(−κ) L^(−H))`. Only `L_1` is sampled, exactly.

use std::time::Instant;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{CampaignResult, Statistic};
use crate::model::{ModelParams, RateFunctionSpec};
use crate::simulate::lt_marginal;
use crate::special::normal_sf;
use crate::stats::{line_fit, log_mean_exp, mean_se, sorted};
use crate::{parallel, rng, Error, Result};

fn require_ldp(m: &ModelParams) -> Result<(f64, f64)> {
    match (m.mgf_exponent(), m.ldp_time_exponent()) {
        (Some(q), Some(g)) => Ok((q, g)),
        _ => Err(Error::Domain(format!(
            "2H = {} >= alpha = {}: E exp(theta Z(t)) is infinite",
            2.0 * m.hurst(),
            m.alpha()
        ))),
    }
}

/// `reps` exact draws of `L_1^H` from `stream(seed, i)`.
fn lt_powers(m: &ModelParams, reps: usize, seed: u64, threads: usize) -> Result<Vec<f64>> {
    let p = *m.stable();
    let h = m.hurst();
    parallel::map_indexed(reps, threads, |i| Ok(lt_marginal(&p, 1.0, &mut rng::stream(seed, i as u64)).value.powf(h)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MgfOptions {
    pub seed: u64,
    /// Levels `a_j` of the default time grid `t_j = (a_j/Λ₁(θ))^(1/γ)`,
    /// which puts every θ on the same band of `t^γ Λ₁(θ)`.
    pub actions: Vec<f64>,
    pub slope_rel_tol: f64,
    pub exponent_rel_tol: f64,
    /// Jackknife groups for the log-mean-exp standard errors.
    pub jackknife_blocks: usize,
    pub symmetry_se: f64,
    #[serde(skip)]
    pub threads: usize,
}

impl Default for MgfOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            actions: vec![1.0, 1.75, 2.5, 3.25, 4.0],
            slope_rel_tol: 0.25,
            exponent_rel_tol: 0.15,
            jackknife_blocks: 100,
            symmetry_se: 2.0,
            threads: 0,
        }
    }
}

/// `log E exp(θ Z(t))` over a time grid per θ, regressed on `t^γ`
/// (γ = 2H(α−1)/(α−2H)); the slopes should approach Λ₁(θ) = B₁θ^(2α/(α−2H))
/// and their log-log fit in θ the exponent `2α/(α−2H)`.
///
/// With `t_grid = None` each θ gets its own grid from `opts.actions`.
pub fn verify_mgf(m: &ModelParams, theta_grid: &[f64], t_grid: Option<&[f64]>, reps: usize, opts: &MgfOptions) -> Result<CampaignResult> {
    let start = Instant::now();
    let (q, gamma) = require_ldp(m)?;
    if theta_grid.len() < 2 || theta_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Argument("need at least two positive theta values".into()));
    }
    if reps < 1000 {
        return Err(Error::Argument(format!("reps = {reps} is below 10^3")));
    }
    let lambda1 = RateFunctionSpec::lambda1(m)?;
    let kappa = m.selfsim_index();
    let mut c = CampaignResult::new(
        "mgf",
        json!({ "model": m, "theta_grid": theta_grid, "t_grid": t_grid, "options": opts }),
        reps * theta_grid.len(),
    );
    let mut log_theta = vec![];
    let mut log_slope = vec![];
    let mut w_slope = vec![];
    for (k, &theta) in theta_grid.iter().enumerate() {
        let target = lambda1.eval(theta).to_f64();
        let ts: Vec<f64> = match t_grid {
            Some(g) => g.to_vec(),
            None => opts.actions.iter().map(|a| (a / target).powf(1.0 / gamma)).collect(),
        };
        if ts.len() < 2 {
            return Err(Error::Argument("need at least two times".into()));
        }
        // an independent sample per θ keeps the slope errors independent
        let s = lt_powers(m, reps, rng::mix(opts.seed, k as u64), opts.threads)?;
        let mut xs = vec![];
        let mut ys = vec![];
        let mut ws = vec![];
        for &t in &ts {
            let c2 = 0.5 * theta * theta * t.powf(2.0 * kappa);
            let v: Vec<f64> = s.iter().map(|x| c2 * x * x).collect();
            let lme = log_mean_exp(&v, opts.jackknife_blocks)?;
            if lme.effective_n < 10.0 {
                c.note(format!(
                    "theta = {theta}, t = {t:.4}: empirical MGF carried by {:.1} samples; estimate truncated",
                    lme.effective_n
                ));
            }
            xs.push(t.powf(gamma));
            ys.push(lme.value);
            ws.push(1.0 / lme.se.max(1e-12).powi(2));
        }
        let f = line_fit(&xs, &ys, Some(&ws))?;
        c.push(Statistic::relative(&format!("slope_theta_{theta}"), f.slope, Some(f.slope_se), target, opts.slope_rel_tol));
        log_theta.push(theta.ln());
        log_slope.push(f.slope.max(f64::MIN_POSITIVE).ln());
        w_slope.push((f.slope / f.slope_se).powi(2));
    }
    let e = line_fit(&log_theta, &log_slope, Some(&w_slope))?;
    c.push(Statistic::relative("theta_exponent", e.slope, Some(e.slope_se), q, opts.exponent_rel_tol));

    // θ = 0: the estimator is exactly zero
    let zero = log_mean_exp(&vec![0.0; 16], 4)?.value;
    c.push(Statistic::absolute("log_mgf_theta_zero", zero, Some(0.0), 0.0, 0.0));

    // sign symmetry from direct draws of Z on two independent halves
    let theta = theta_grid[theta_grid.len() / 2];
    let t = (opts.actions.first().copied().unwrap_or(1.0) / lambda1.eval(theta).to_f64()).powf(1.0 / gamma);
    let tk = t.powf(kappa);
    let sym_seed = rng::mix(opts.seed, u64::MAX - 1);
    let z = parallel::map_indexed(reps, opts.threads, |i| {
        let mut r = rng::stream(sym_seed, i as u64);
        let l = lt_marginal(m.stable(), 1.0, &mut r).value;
        let n: f64 = r.sample(StandardNormal);
        Ok(tk * l.powf(m.hurst()) * n)
    })?;
    let (h1, h2) = z.split_at(reps / 2);
    let plus = log_mean_exp(&h1.iter().map(|z| theta * z).collect::<Vec<_>>(), opts.jackknife_blocks)?;
    let minus = log_mean_exp(&h2.iter().map(|z| -theta * z).collect::<Vec<_>>(), opts.jackknife_blocks)?;
    let joint = (plus.se.powi(2) + minus.se.powi(2)).sqrt();
    c.push(Statistic::within_se("symmetry_difference", plus.value - minus.value, joint, 0.0, opts.symmetry_se));
    Ok(c.finish(start))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LdpOptions {
    pub seed: u64,
    /// Levels `A_j` of the default grid `t_j = (A_j/Λ₁*(x))^(1/γ)`.
    pub actions: Vec<f64>,
    pub slope_rel_tol: f64,
    #[serde(skip)]
    pub threads: usize,
}

impl Default for LdpOptions {
    fn default() -> Self {
        Self { seed: 1, actions: vec![2.0, 4.0, 6.0, 8.0, 10.0], slope_rel_tol: 0.25, threads: 0 }
    }
}

/// `log P{t^(−γ) Z(t) ≥ x}` regressed on the speed `t^γ`; the slope should
/// approach `−Λ₁*(x) = −inf_{y ≥ x} Λ₁*(y)`.
pub fn verify_ldp_interval(m: &ModelParams, x: f64, t_grid: Option<&[f64]>, reps: usize, opts: &LdpOptions) -> Result<CampaignResult> {
    let start = Instant::now();
    let (_, gamma) = require_ldp(m)?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Argument(format!("x = {x} must be positive")));
    }
    let star = RateFunctionSpec::lambda1_star(m)?;
    let rate = star.eval(x).to_f64();
    let ts: Vec<f64> = match t_grid {
        Some(g) => g.to_vec(),
        None => opts.actions.iter().map(|a| (a / rate).powf(1.0 / gamma)).collect(),
    };
    if ts.len() < 2 || ts.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Argument("need at least two positive times".into()));
    }
    let kappa = m.selfsim_index();
    let scales = sorted(&lt_powers(m, reps, opts.seed, opts.threads)?);
    let mut c = CampaignResult::new("ldp_interval", json!({ "model": m, "x": x, "t_grid": ts, "options": opts }), reps);
    let mut xs = vec![];
    let mut ys = vec![];
    let mut ws = vec![];
    for &t in &ts {
        // P{Z(t) ≥ x t^γ} = P{Z(1) ≥ y}, y = x t^(γ−κ)
        let y = x * t.powf(gamma - kappa);
        let from = scales.partition_point(|&s| s * 12.0 < y);
        let mut probs = vec![0.0; from];
        probs.extend(scales[from..].iter().map(|&s| normal_sf(y / s)));
        let ms = mean_se(&probs);
        if !(ms.mean > 0.0) {
            return Err(Error::InsufficientData(format!(
                "no mass beyond x = {x} at t = {t}; enlarge reps or reduce x"
            )));
        }
        xs.push(t.powf(gamma));
        ys.push(ms.mean.ln());
        ws.push((ms.mean / ms.se.max(f64::MIN_POSITIVE)).powi(2));
    }
    let f = line_fit(&xs, &ys, Some(&ws))?;
    c.push(Statistic::relative("slope", f.slope, Some(f.slope_se), -rate, opts.slope_rel_tol));
    c.push(Statistic::info("fit_r2", f.r2, None));
    let ys_grid: Vec<f64> = (0..=50).map(|k| x * (1.0 + 9.0 * k as f64 / 50.0)).collect();
    let inf_at_x = ys_grid.iter().all(|&y| star.eval(y).to_f64() >= rate);
    c.push(Statistic::holds("infimum_attained_at_x", inf_at_x, "Λ₁*(y) ≥ Λ₁*(x) for y ≥ x"));
    let near = star.eval(x * (1.0 + 1e-9)).to_f64();
    c.push(Statistic::holds(
        "closure_equals_interior",
        (near / rate - 1.0).abs() < 1e-6,
        "Λ₁* continuous at x: [x,∞) and (x,∞) share the rate",
    ));
    Ok(c.finish(start))
}

/// Cross-campaign coherence: the fitted tail exponent κ̂ and the fitted
/// θ-exponent q̂ should satisfy κ = q/(q − 1). Both fits are pre-asymptotic,
/// so the comparison uses the tail-exponent tolerance band rather than
/// standard errors alone.
pub fn conjugacy_check(tail: &CampaignResult, mgf: &CampaignResult, rel_tol: f64) -> Result<CampaignResult> {
    let start = Instant::now();
    let get = |c: &CampaignResult, name: &str| {
        c.stat(name)
            .map(|s| (s.estimate, s.se.unwrap_or(f64::NAN), s.target))
            .ok_or_else(|| Error::Argument(format!("campaign {} lacks {name}", c.name)))
    };
    let (k, k_se, k_target) = get(tail, "exponent_free")?;
    let (q, q_se, _) = get(mgf, "theta_exponent")?;
    let conj = q / (q - 1.0);
    let conj_se = q_se / (q - 1.0).powi(2);
    let mut c = CampaignResult::new("conjugacy", json!({ "tail": tail.params, "mgf": mgf.params }), tail.sample_size);
    c.push(Statistic::info("tail_exponent_fit", k, Some(k_se)));
    c.push(Statistic::info("conjugate_of_theta_exponent", conj, Some(conj_se)));
    let scale = k_target.unwrap_or(conj);
    c.push(Statistic::band(
        "difference",
        k - conj,
        Some((k_se * k_se + conj_se * conj_se).sqrt()),
        Some(0.0),
        -rel_tol * scale,
        rel_tol * scale,
        &format!("|κ̂ − q̂/(q̂−1)| ≤ {rel_tol}·κ"),
    ));
    Ok(c.finish(start))
}
