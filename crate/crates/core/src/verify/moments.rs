use std::time::Instant;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{CampaignResult, Statistic};
use crate::model::{
    lt_moment_bounds, lt_moment_exact, lt_moment_interval, z_moment_bounds, z_moment_exact, ModelParams, MomentReport,
};
use crate::simulate::{
    default_u_step, inverse_subordinator_at, local_time_occupation, stable_path, EpsilonRule, LocalTimeMethod, SimConfig,
};
use crate::stats::mean_se;
use crate::{parallel, rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentOptions {
    pub seed: u64,
    pub method: LocalTimeMethod,
    /// Time steps covering `[0, b]`.
    pub n_steps: usize,
    pub epsilon_rule: EpsilonRule,
    /// Allowed distance from the target (or bounds) in standard errors.
    pub allowed_se: f64,
    #[serde(skip)]
    pub threads: usize,
}

impl Default for MomentOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            method: LocalTimeMethod::InverseSubordinator,
            n_steps: 1 << 14,
            epsilon_rule: EpsilonRule::default(),
            allowed_se: 3.0,
            threads: 0,
        }
    }
}

/// Draws `(L_b − L_a, Z(b) − Z(a))` for replicate `i`. Given the local time,
/// `Z(b) − Z(a) = W(L_b) − W(L_a)` is exactly `N(0, (L_b − L_a)^(2H))`, so
/// only L needs a path.
fn draw_increment(m: &ModelParams, a: f64, b: f64, opts: &MomentOptions, i: usize) -> Result<(f64, f64)> {
    let p = m.stable();
    let seed = rng::mix(opts.seed, i as u64);
    let dt = b / opts.n_steps as f64;
    let (la, lb) = match opts.method {
        LocalTimeMethod::InverseSubordinator => {
            let mut r = rng::substream(seed, 0);
            let times = if a > 0.0 { vec![a, b] } else { vec![b] };
            let l = inverse_subordinator_at(p, &times, default_u_step(p, dt), &mut r)?;
            if a > 0.0 {
                (l[0], l[1])
            } else {
                (0.0, l[0])
            }
        }
        LocalTimeMethod::Occupation => {
            let x = stable_path(p, &SimConfig::new(opts.n_steps, dt, seed, LocalTimeMethod::Occupation))?;
            let l = local_time_occupation(&x, opts.epsilon_rule.epsilon(p, dt))?;
            let at = |t: f64| l.at(t).ok_or_else(|| Error::Argument(format!("time {t} outside the grid")));
            (if a > 0.0 { at(a)? } else { 0.0 }, at(b)?)
        }
    };
    let dl = (lb - la).max(0.0);
    let n: f64 = rng::substream(seed, 1).sample(StandardNormal);
    Ok((dl, dl.powf(m.hurst()) * n))
}

fn moment_stat(name: &str, r: &MomentReport) -> Statistic {
    match (r.target_exact, r.bound_lower, r.bound_upper) {
        (Some(t), _, _) => Statistic {
            rule: "within allowed SE of the exact moment".into(),
            pass: Some(r.verdict.pass),
            ..Statistic::compare(name, r.estimate, Some(r.stderr), t)
        },
        (None, Some(lo), Some(hi)) => Statistic {
            lower: Some(lo),
            upper: Some(hi),
            rule: "inside [lower, upper] up to the allowed SE".into(),
            pass: Some(r.verdict.pass),
            ..Statistic::info(name, r.estimate, Some(r.stderr))
        },
        _ => Statistic::info(name, r.estimate, Some(r.stderr)),
    }
}

/// Empirical `E(L_b − L_a)^n` and `E|Z(b) − Z(a)|^(n/H)` against the exact
/// moments (a = 0) or the two-sided bounds (a > 0).
///
/// Since `E|ΔZ|^(n/H) = E|N|^(n/H) E(ΔL)^n`, both families test the same
/// local-time moments; the second adds the fBm layer.
pub fn verify_moments(m: &ModelParams, a: f64, b: f64, orders: &[u32], reps: usize, opts: &MomentOptions) -> Result<CampaignResult> {
    let start = Instant::now();
    if !(a >= 0.0 && a < b && b.is_finite()) {
        return Err(Error::Argument(format!("need 0 <= a < b, got a = {a}, b = {b}")));
    }
    if orders.is_empty() || orders.iter().any(|&n| n == 0 || n > 6) {
        return Err(Error::Argument(format!("orders {orders:?} must lie in 1..=6")));
    }
    if reps < 10_000 {
        return Err(Error::Argument(format!("reps = {reps} is below the minimum of 10^4")));
    }
    let p = m.stable();
    SimConfig::new(opts.n_steps, b / opts.n_steps as f64, opts.seed, opts.method).validate(p)?;
    let draws = parallel::map_indexed(reps, opts.threads, |i| {
        draw_increment(m, a, b, opts, i).map_err(|e| Error::Replicate { index: i, source: Box::new(e) })
    })?;

    let mut c = CampaignResult::new(
        "moments",
        json!({ "model": m, "a": a, "b": b, "orders": orders, "options": opts }),
        reps,
    );
    let h = m.hurst();
    for &n in orders {
        let nf = n as f64;
        let lt: Vec<f64> = draws.iter().map(|d| d.0.powi(n as i32)).collect();
        let zz: Vec<f64> = draws.iter().map(|d| d.1.abs().powf(nf / h)).collect();
        let (lt, zz) = (mean_se(&lt), mean_se(&zz));
        let (rl, rz) = if a == 0.0 {
            (
                MomentReport::against_exact(nf, lt.mean, lt.se, lt_moment_exact(p, nf, b), opts.allowed_se),
                MomentReport::against_exact(nf / h, zz.mean, zz.se, z_moment_exact(m, n, b), opts.allowed_se),
            )
        } else {
            let (l_lo, l_hi) = lt_moment_bounds(p, n, a, b)?;
            let (z_lo, z_hi) = z_moment_bounds(m, n, a, b)?;
            c.push(Statistic::compare(
                &format!("lt_moment_{n}_quadrature"),
                lt.mean,
                Some(lt.se),
                lt_moment_interval(p, n, a, b, 1e-10)?,
            ));
            (
                MomentReport::against_bounds(nf, lt.mean, lt.se, l_lo, l_hi, opts.allowed_se),
                MomentReport::against_bounds(nf / h, zz.mean, zz.se, z_lo, z_hi, opts.allowed_se),
            )
        };
        for (name, r) in [(format!("lt_moment_{n}"), &rl), (format!("z_abs_moment_{n}"), &rz)] {
            if r.stderr > 0.2 * r.estimate.abs() {
                c.note(format!("{name}: undersampled, SE/estimate = {:.3}", r.stderr / r.estimate));
            }
            c.push(moment_stat(&name, r));
        }
    }
    Ok(c.finish(start))
}

/// Compares `E L_b` from two campaigns run with different local-time
/// estimators: the difference must be within `allowed_se` joint standard
/// errors of zero.
pub fn estimator_agreement(first: &CampaignResult, second: &CampaignResult, allowed_se: f64) -> Result<CampaignResult> {
    let start = Instant::now();
    let get = |c: &CampaignResult| {
        c.stat("lt_moment_1")
            .and_then(|s| s.se.map(|se| (s.estimate, se)))
            .ok_or_else(|| Error::Argument(format!("campaign {} has no first local-time moment", c.name)))
    };
    let (m1, s1) = get(first)?;
    let (m2, s2) = get(second)?;
    let mut c = CampaignResult::new(
        "lt_estimator_agreement",
        json!({ "first": first.params, "second": second.params }),
        first.sample_size + second.sample_size,
    );
    let joint = (s1 * s1 + s2 * s2).sqrt();
    c.push(Statistic::info("first_mean", m1, Some(s1)));
    c.push(Statistic::info("second_mean", m2, Some(s2)));
    c.push(Statistic::within_se("difference", m1 - m2, joint, 0.0, allowed_se));
    Ok(c.finish(start))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_inputs() {
        let m = ModelParams::gaussian_anchor();
        let o = MomentOptions::default();
        assert!(verify_moments(&m, 0.0, 1.0, &[7], 10_000, &o).is_err());
        assert!(verify_moments(&m, 0.0, 1.0, &[1], 100, &o).is_err());
        assert!(verify_moments(&m, 1.0, 1.0, &[1], 10_000, &o).is_err());
    }

    #[test]
    fn anchor_mean_matches_brownian_local_time() {
        let m = ModelParams::gaussian_anchor();
        let o = MomentOptions { n_steps: 1 << 10, ..MomentOptions::default() };
        let c = verify_moments(&m, 0.0, 1.0, &[1, 2], 10_000, &o).unwrap();
        let s = c.stat("lt_moment_1").unwrap();
        assert!((s.target.unwrap() - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-14);
        assert!(c.pass, "{:?}", c.failures());
        assert_eq!(c.stats.len(), 4);
    }

    #[test]
    fn interval_moments_fall_in_the_sandwich() {
        let m = ModelParams::from_parts(1.5, 0.0, 1.0, 0.5).unwrap();
        let o = MomentOptions { n_steps: 1 << 10, seed: 5, ..MomentOptions::default() };
        let c = verify_moments(&m, 1.0, 2.0, &[1, 2], 10_000, &o).unwrap();
        assert!(c.pass, "{:?}", c.failures());
        assert!(c.stat("lt_moment_2_quadrature").is_some());
    }

    #[test]
    fn results_do_not_depend_on_workers() {
        let m = ModelParams::gaussian_anchor();
        let o = MomentOptions { n_steps: 256, ..MomentOptions::default() };
        let a = verify_moments(&m, 0.0, 1.0, &[1], 10_000, &MomentOptions { threads: 1, ..o.clone() }).unwrap();
        let b = verify_moments(&m, 0.0, 1.0, &[1], 10_000, &MomentOptions { threads: 3, ..o }).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }
}
