//! Upper-tail campaigns. Exceedance probabilities of the increment are
//! estimated by conditioning on the local time — given ΔL, the increment is
//! exactly `N(0, ΔL^(2H))` — which turns deep quantiles into smooth averages
//! of normal tails. Plain complementary-rank survival curves are fitted
//! alongside as diagnostics.

use std::time::Instant;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{batch_ranges, batch_se, CampaignResult, Statistic};
use crate::model::{a1, lt_tail_constant, tail_constant_b2, ModelParams, StableParams};
use crate::simulate::{
    default_u_step, inverse_subordinator_at, lt_marginal, subordinator_index, LocalTimeMethod, SimConfig, ZSimulator,
};
use crate::special::normal_sf;
use crate::stats::{line_fit, rank_survival, sorted, tail_fit_fixed, tail_fit_free, SurvivalPoints, TailFit};
use crate::{parallel, rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TailOptions {
    pub seed: u64,
    /// Quantile window `[q_lo, q_hi]` of the fitted tail.
    pub quantile_window: (f64, f64),
    /// Abscissas in the window.
    pub points: usize,
    /// Range searched by the free-exponent fit.
    pub exponent_range: (f64, f64),
    pub exponent_rel_tol: f64,
    /// When set, replaces the relative exponent tolerance.
    pub exponent_abs_tol: Option<f64>,
    pub constant_rel_tol: f64,
    /// Batches for the Monte Carlo standard errors of the fits.
    pub batches: usize,
    /// Time steps covering `[0, b]` for the local-time paths used when a > 0.
    pub n_steps: usize,
    #[serde(skip)]
    pub threads: usize,
}

impl Default for TailOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            quantile_window: (0.99, 0.9999),
            points: 200,
            exponent_range: (0.5, 4.0),
            exponent_rel_tol: 0.15,
            exponent_abs_tol: None,
            constant_rel_tol: 0.35,
            batches: 10,
            n_steps: 1 << 12,
            threads: 0,
        }
    }
}

impl TailOptions {
    fn exponent_stat(&self, name: &str, estimate: f64, se: Option<f64>, target: f64) -> Statistic {
        match self.exponent_abs_tol {
            Some(tol) => Statistic::absolute(name, estimate, se, target, tol),
            None => Statistic::relative(name, estimate, se, target, self.exponent_rel_tol),
        }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.quantile_window;
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return Err(Error::Argument(format!("quantile window ({lo}, {hi}) must satisfy 0 < lo < hi < 1")));
        }
        if self.points < 3 || self.batches < 2 {
            return Err(Error::Argument("need at least 3 points and 2 batches".into()));
        }
        Ok(())
    }
}

/// `(1/n) Σ 2Φ̄(x/s_i)` for ascending scales `s`, skipping scales whose
/// contribution is below `2Φ̄(9) ≈ 2e−19`.
fn gaussian_mixture_sf(scales_sorted: &[f64], x: f64) -> f64 {
    let from = scales_sorted.partition_point(|&s| s * 9.0 < x);
    let sum: f64 = scales_sorted[from..].iter().map(|&s| 2.0 * normal_sf(x / s)).sum();
    sum / scales_sorted.len() as f64
}

/// `(1/n) Σ exp(−k_i c)` for ascending rates `k`, skipping terms below e^−50.
fn weibull_mixture_sf(rates_sorted: &[f64], c: f64) -> f64 {
    let to = rates_sorted.partition_point(|&k| k * c < 50.0);
    let sum: f64 = rates_sorted[..to].iter().map(|&k| (-k * c).exp()).sum();
    sum / rates_sorted.len() as f64
}

/// Conditional survival points at `xs`, for the whole sample and per batch.
struct Conditional {
    full: SurvivalPoints,
    batches: Vec<SurvivalPoints>,
}

fn conditional_points<F>(xs: &[f64], mixing: &[f64], batches: usize, sf: F) -> Result<Conditional>
where
    F: Fn(&[f64], f64) -> f64,
{
    let points = |sample: &[f64]| -> Result<SurvivalPoints> {
        let s = sorted(sample);
        let n = s.len() as f64;
        let mut p = SurvivalPoints { x: vec![], log_s: vec![], weight: vec![] };
        for &x in xs {
            let v = sf(&s, x);
            if !(v > 0.0) {
                return Err(Error::InsufficientData(format!("conditional survival vanished at x = {x}")));
            }
            p.x.push(x);
            p.log_s.push(v.ln());
            p.weight.push(n * v);
        }
        Ok(p)
    };
    let full = points(mixing)?;
    let batches = batch_ranges(mixing.len(), batches).into_iter().map(|r| points(&mixing[r])).collect::<Result<_>>()?;
    Ok(Conditional { full, batches })
}

/// Free and fixed fits on the whole sample with batch standard errors.
fn fits_with_se(c: &Conditional, kappa: f64, range: (f64, f64)) -> Result<(TailFit, f64, TailFit, f64)> {
    let free = tail_fit_free(&c.full, range.0, range.1)?;
    let fixed = tail_fit_fixed(&c.full, kappa)?;
    let mut fe = vec![];
    let mut fc = vec![];
    for b in &c.batches {
        fe.push(tail_fit_free(b, range.0, range.1)?.exponent);
        fc.push(tail_fit_fixed(b, kappa)?.constant);
    }
    Ok((free, batch_se(&fe), fixed, batch_se(&fc)))
}

fn monotone(p: &SurvivalPoints) -> bool {
    p.x.windows(2).all(|w| w[0] <= w[1]) && p.log_s.windows(2).all(|w| w[1] <= w[0])
}

fn push_rank_diagnostics(c: &mut CampaignResult, sample_sorted: &[f64], opts: &TailOptions, kappa: f64, constant: f64) -> Result<()> {
    let (lo, hi) = opts.quantile_window;
    let rank = rank_survival(sample_sorted, lo, hi, opts.points)?;
    let free = tail_fit_free(&rank, opts.exponent_range.0, opts.exponent_range.1)?;
    let fixed = tail_fit_fixed(&rank, kappa)?;
    c.push(Statistic::compare("rank_exponent_free", free.exponent, None, kappa));
    c.push(Statistic::compare("rank_constant_fixed", fixed.constant, Some(fixed.constant_se), constant));
    c.push(Statistic::holds("rank_survival_monotone", monotone(&rank), "log-survival nonincreasing in x"));
    Ok(())
}

/// Draws of `ΔL = L_b − L_a`; exact Mittag-Leffler marginals when a = 0
/// (returned with Kanter's A(U)), inverse-subordinator paths otherwise.
fn lt_increments(p: &StableParams, a: f64, b: f64, reps: usize, opts: &TailOptions) -> Result<Vec<(f64, f64)>> {
    parallel::map_indexed(reps, opts.threads, |i| {
        let mut r = rng::stream(opts.seed, i as u64);
        if a == 0.0 {
            let d = lt_marginal(p, b, &mut r);
            Ok((d.value, d.kanter))
        } else {
            let du = default_u_step(p, b / opts.n_steps as f64);
            let l = inverse_subordinator_at(p, &[a, b], du, &mut r)
                .map_err(|e| Error::Replicate { index: i, source: Box::new(e) })?;
            Ok(((l[1] - l[0]).max(0.0), f64::NAN))
        }
    })
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(a >= 0.0 && a < b && b.is_finite()) {
        return Err(Error::Argument(format!("need 0 <= a < b, got a = {a}, b = {b}")));
    }
    Ok(())
}

/// Fits `log P{|Z(b) − Z(a)| > x}` against `x^(2α/(α+2H))` over the upper
/// quantile window: free exponent and, at the model exponent, the constant
/// that should approach B₂(a, b).
pub fn verify_tail(m: &ModelParams, a: f64, b: f64, reps: usize, opts: &TailOptions) -> Result<CampaignResult> {
    let start = Instant::now();
    check_interval(a, b)?;
    opts.validate()?;
    let lts = lt_increments(m.stable(), a, b, reps, opts)?;
    let h = m.hurst();
    let scales: Vec<f64> = lts.iter().map(|d| d.0.powf(h)).collect();
    let abs_z: Vec<f64> = parallel::map_indexed(reps, opts.threads, |i| {
        let n: f64 = rng::substream(rng::mix(opts.seed, i as u64), 1).sample(StandardNormal);
        Ok((scales[i] * n).abs())
    })?;
    let z_sorted = sorted(&abs_z);
    let (lo, hi) = opts.quantile_window;
    let xs = rank_survival(&z_sorted, lo, hi, opts.points)?.x;

    let kappa = m.tail_exponent();
    let b2 = tail_constant_b2(m, a, b)?;
    let cond = conditional_points(&xs, &scales, opts.batches, gaussian_mixture_sf)?;
    let (free, free_se, fixed, fixed_se) = fits_with_se(&cond, kappa, opts.exponent_range)?;

    let mut c = CampaignResult::new("tail", json!({ "model": m, "a": a, "b": b, "options": opts }), reps);
    c.push(opts.exponent_stat("exponent_free", free.exponent, Some(free_se), kappa));
    c.push(Statistic::relative("constant_fixed", fixed.constant, Some(fixed_se), b2, opts.constant_rel_tol));
    c.push(Statistic::info("fit_r2", fixed.r2, None));
    c.push(Statistic::holds("survival_monotone", monotone(&cond.full), "log-survival nonincreasing in x"));
    push_rank_diagnostics(&mut c, &z_sorted, opts, kappa, b2)?;
    Ok(c.finish(start))
}

/// The same scheme for `L_b − L_a` against exponent α and the constant
/// `(1/α)[(α/(α−1))(b−a)C]^(−(α−1))`. For a = 0 the conditional survival
/// given Kanter's A(U) is used; for a > 0 only the rank curve exists.
pub fn verify_lt_tail(p: &StableParams, a: f64, b: f64, reps: usize, opts: &TailOptions) -> Result<CampaignResult> {
    let start = Instant::now();
    check_interval(a, b)?;
    opts.validate()?;
    let lts = lt_increments(p, a, b, reps, opts)?;
    let values: Vec<f64> = lts.iter().map(|d| d.0).collect();
    let s = sorted(&values);
    let kappa = p.alpha();
    let target = lt_tail_constant(p, a, b)?;
    let mut c = CampaignResult::new("lt_tail", json!({ "stable": p, "a": a, "b": b, "options": opts }), reps);
    if a == 0.0 {
        let (lo, hi) = opts.quantile_window;
        let xs = rank_survival(&s, lo, hi, opts.points)?.x;
        let scale = a1(p) * b.powf(subordinator_index(p));
        let rates: Vec<f64> = lts.iter().map(|d| d.1).collect();
        let cond = conditional_points(&xs, &rates, opts.batches, |r, x| weibull_mixture_sf(r, (x / scale).powf(kappa)))?;
        let (free, free_se, fixed, fixed_se) = fits_with_se(&cond, kappa, opts.exponent_range)?;
        c.push(opts.exponent_stat("exponent_free", free.exponent, Some(free_se), kappa));
        c.push(Statistic::relative("constant_fixed", fixed.constant, Some(fixed_se), target, opts.constant_rel_tol));
        c.push(Statistic::info("fit_r2", fixed.r2, None));
        c.push(Statistic::holds("survival_monotone", monotone(&cond.full), "log-survival nonincreasing in x"));
        push_rank_diagnostics(&mut c, &s, opts, kappa, target)?;
    } else {
        let (lo, hi) = opts.quantile_window;
        let rank = rank_survival(&s, lo, hi, opts.points)?;
        let free = tail_fit_free(&rank, opts.exponent_range.0, opts.exponent_range.1)?;
        let fixed = tail_fit_fixed(&rank, kappa)?;
        c.push(opts.exponent_stat("exponent_free", free.exponent, None, kappa));
        c.push(Statistic::relative("constant_fixed", fixed.constant, Some(fixed.constant_se), target, opts.constant_rel_tol));
        c.push(Statistic::info("fit_r2", fixed.r2, None));
        c.push(Statistic::holds("survival_monotone", monotone(&rank), "log-survival nonincreasing in x"));
        c.note("a > 0: rank-based fit, exponent has no batch standard error".into());
    }
    Ok(c.finish(start))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaxTailOptions {
    pub seed: u64,
    /// Time steps covering `[0, b]`.
    pub n_steps: usize,
    pub fbm_oversample: usize,
    /// Survival window `[s_hi, s_lo]` of the maximum from which the default
    /// x-grid is taken (as quantile levels).
    pub quantile_window: (f64, f64),
    pub points: usize,
    pub r2_min: f64,
    /// Upper index of the exhaustive quasi-superadditivity check.
    pub superadditivity_n: usize,
    #[serde(skip)]
    pub threads: usize,
}

impl Default for MaxTailOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            n_steps: 1 << 10,
            fbm_oversample: 4,
            quantile_window: (0.9, 0.999),
            points: 30,
            r2_min: 0.98,
            superadditivity_n: 64,
            threads: 0,
        }
    }
}

/// Worst ratio `(g(i,j) + g(j+1,k)) / (2^(1−r) g(i,k))` over `1 ≤ i ≤ j < k ≤ n`
/// for `g(j,k) = (k − j)^r`, with its count of violations (ratio > 1 + 1e−12).
pub fn quasi_superadditivity(r: f64, n: usize) -> (f64, usize) {
    let q = 2f64.powf(1.0 - r);
    let g = |j: usize, k: usize| ((k - j) as f64).powf(r);
    let mut worst = 0.0f64;
    let mut bad = 0;
    for i in 1..=n {
        for j in i..n {
            for k in (j + 1)..=n {
                let ratio = (g(i, j) + g(j + 1, k)) / (q * g(i, k));
                worst = worst.max(ratio);
                if ratio > 1.0 + 1e-12 {
                    bad += 1;
                }
            }
        }
    }
    (worst, bad)
}

/// `P{max_[a,b] |Z(t) − Z(a)| > x}` from simulated paths, regressed on
/// `x^(2α/(α+2H)) / (b−a)^(2H(α−1)/(α+2H))`. The functional form of the
/// maximal inequality is asserted (linearity, negative slope); the slope
/// itself — an empirical analogue of the unspecified constant — is reported.
pub fn verify_max_tail(m: &ModelParams, a: f64, b: f64, reps: usize, x_grid: Option<&[f64]>, opts: &MaxTailOptions) -> Result<CampaignResult> {
    let start = Instant::now();
    check_interval(a, b)?;
    if reps < 1000 {
        return Err(Error::Argument(format!("reps = {reps}: path-level tails need at least 10^3 paths")));
    }
    let method = if m.stable().nu() == 0.0 { LocalTimeMethod::InverseSubordinator } else { LocalTimeMethod::Occupation };
    let cfg = SimConfig {
        fbm_oversample: opts.fbm_oversample,
        ..SimConfig::on_horizon(b, opts.n_steps, opts.seed, method)
    };
    let sim = ZSimulator::new(m, &cfg)?;
    let ia = (a / cfg.dt).round() as usize;
    let pairs: Vec<(f64, f64)> = parallel::map_indexed(reps, opts.threads, |i| {
        let z = sim
            .path(rng::mix(opts.seed, i as u64))
            .map_err(|e| Error::Replicate { index: i, source: Box::new(e) })?
            .z
            .values;
        let z0 = z[ia];
        let max = z[ia..].iter().fold(0.0f64, |acc, &v| acc.max((v - z0).abs()));
        Ok((max, (z[z.len() - 1] - z0).abs()))
    })?;
    let maxima = sorted(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let incs = sorted(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    let n = reps as f64;
    let (lo, hi) = opts.quantile_window;
    let xs: Vec<f64> = match x_grid {
        Some(g) => g.to_vec(),
        None => rank_survival(&maxima, lo, hi, opts.points)?.x,
    };
    let tau = m.tail_exponent();
    let r = m.interval_exponent();
    let scale = (b - a).powf(r);
    let survival = |s: &[f64], x: f64| (s.len() - s.partition_point(|&v| v <= x)) as f64 / n;

    let fit = |s: &[f64], xs: &[f64]| -> Result<(crate::stats::LineFit, usize)> {
        let mut u = vec![];
        let mut y = vec![];
        let mut w = vec![];
        for &x in xs {
            let p = survival(s, x);
            if p > 0.0 {
                u.push(x.powf(tau) / scale);
                y.push(p.ln());
                w.push(n * p);
            }
        }
        if u.len() < 3 {
            return Err(Error::InsufficientData("fewer than 3 nonempty tail points; enlarge reps".into()));
        }
        Ok((line_fit(&u, &y, Some(&w))?, u.len()))
    };
    let (fm, used) = fit(&maxima, &xs)?;
    let xs_inc = rank_survival(&incs, lo, hi, opts.points)?.x;
    let (fi, _) = fit(&incs, &xs_inc)?;
    let dominated = xs.iter().all(|&x| survival(&maxima, x) >= survival(&incs, x));

    let mut c = CampaignResult::new(
        "max_tail",
        json!({ "model": m, "a": a, "b": b, "x_grid": x_grid, "options": opts }),
        reps,
    );
    c.push(Statistic::band("r2", fm.r2, None, None, opts.r2_min, 1.0, &format!("R² ≥ {}", opts.r2_min)));
    c.push(Statistic::band("slope", fm.slope, Some(fm.slope_se), None, f64::NEG_INFINITY, 0.0, "strictly negative"));
    c.push(Statistic::info("a8_analogue", -fm.slope, Some(fm.slope_se)));
    c.push(Statistic::info("points_used", used as f64, None));
    c.push(Statistic::info("increment_slope", fi.slope, Some(fi.slope_se)));
    let joint = (fm.slope_se.powi(2) + fi.slope_se.powi(2)).sqrt();
    c.push(Statistic::band(
        "slope_magnitude_excess",
        fm.slope.abs() - fi.slope.abs(),
        Some(joint),
        Some(0.0),
        f64::NEG_INFINITY,
        2.0 * joint,
        "max-tail slope magnitude ≤ increment-tail slope magnitude + 2 joint SE",
    ));
    c.push(Statistic::holds("max_dominates_increment", dominated, "P{max > x} ≥ P{|increment| > x} on the grid"));
    let (worst, bad) = quasi_superadditivity(r, opts.superadditivity_n);
    c.push(Statistic::at_most("superadditivity_worst_ratio", worst, 1.0 + 1e-12));
    c.push(Statistic::at_most("superadditivity_violations", bad as f64, 0.0));
    Ok(c.finish(start))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixture_sf_skips_only_negligible_terms() {
        let s: Vec<f64> = (1..=1000).map(|i| i as f64 / 1000.0).collect();
        let full: f64 = s.iter().map(|&v| 2.0 * normal_sf(3.0 / v)).sum::<f64>() / 1000.0;
        assert!((gaussian_mixture_sf(&s, 3.0) / full - 1.0).abs() < 1e-14);
        let k: Vec<f64> = (1..=1000).map(|i| i as f64 / 100.0).collect();
        let full: f64 = k.iter().map(|&v| (-v * 20.0).exp()).sum::<f64>() / 1000.0;
        assert!((weibull_mixture_sf(&k, 20.0) / full - 1.0).abs() < 1e-14);
    }

    #[test]
    fn superadditivity_holds_exhaustively() {
        for r in [0.1, 0.25, 1.0 / 3.0, 0.5, 0.9] {
            let (worst, bad) = quasi_superadditivity(r, 64);
            assert_eq!(bad, 0, "r = {r}");
            assert!(worst < 1.0);
        }
    }

    #[test]
    fn anchor_increment_tail_small_run() {
        let m = ModelParams::gaussian_anchor();
        let o = TailOptions { quantile_window: (0.99, 0.999), points: 60, ..TailOptions::default() };
        let c = verify_tail(&m, 0.0, 1.0, 100_000, &o).unwrap();
        let e = c.stat("exponent_free").unwrap();
        assert!(e.se.unwrap() > 0.0);
        assert!((e.estimate - 4.0 / 3.0).abs() < 0.2, "{}", e.estimate);
        assert_eq!(c.stat("survival_monotone").unwrap().pass, Some(true));
    }

    #[test]
    fn interval_length_scales_the_constant() {
        // B₂(0, 2)/B₂(0, 1) = 2^(−2H(α−1)/(α+2H))
        let m = ModelParams::gaussian_anchor();
        let o = TailOptions { quantile_window: (0.99, 0.999), points: 60, ..TailOptions::default() };
        let c1 = verify_tail(&m, 0.0, 1.0, 200_000, &o).unwrap();
        let c2 = verify_tail(&m, 0.0, 2.0, 200_000, &TailOptions { seed: 9, ..o }).unwrap();
        let get = |c: &CampaignResult| c.stat("constant_fixed").unwrap().estimate;
        let ratio = get(&c2) / get(&c1);
        let target = 2f64.powf(-m.interval_exponent());
        assert!((ratio / target - 1.0).abs() < 0.03, "{ratio} vs {target}");
    }

    #[test]
    fn lt_tail_anchor_matches_half_normal() {
        let p = StableParams::brownian();
        let o = TailOptions { quantile_window: (0.99, 0.999), points: 60, ..TailOptions::default() };
        let c = verify_lt_tail(&p, 0.0, 1.0, 100_000, &o).unwrap();
        assert_eq!(c.stat("constant_fixed").unwrap().target, Some(0.5));
        assert!(c.stat("exponent_free").unwrap().pass.unwrap());
    }

    #[test]
    fn max_tail_small_run_is_linear() {
        let m = ModelParams::gaussian_anchor();
        let o = MaxTailOptions { n_steps: 128, quantile_window: (0.9, 0.99), points: 15, ..MaxTailOptions::default() };
        let c = verify_max_tail(&m, 0.0, 1.0, 5000, None, &o).unwrap();
        assert!(c.stat("slope").unwrap().estimate < 0.0);
        assert_eq!(c.stat("max_dominates_increment").unwrap().pass, Some(true));
        assert_eq!(c.stat("superadditivity_violations").unwrap().estimate, 0.0);
    }
}
