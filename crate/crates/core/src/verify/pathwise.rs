//! Pathwise regularity: the uniform modulus of continuity and the two laws
//! of the iterated logarithm, from one set of simulated paths on `[0, 1]`.
//!
//! The global law concerns `t → ∞`; it is read off a path on `[0, 1]` through
//! self-similarity, `(Z(Ts))_s = T^κ (Z(s))_s` in law, with T the top of the
//! time grid.

use std::collections::VecDeque;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{batch_ranges, batch_se, quantile_with_se, CampaignResult, Statistic};
use crate::model::ModelParams;
use crate::simulate::{LocalTimeMethod, SimConfig, ZSimulator};
use crate::stats::{line_fit, median, quantile_sorted, sorted};
use crate::{parallel, rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LilMode {
    /// `t → ∞`, normalized by `t^κ (log log t)^p`.
    Global,
    /// `h ↓ 0` around a fixed time, normalized by `h^κ (log log 1/h)^p`.
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathwiseGrids {
    /// Window lengths of the modulus statistic.
    pub h_grid: Vec<f64>,
    /// Times of the global statistic (geometric, at least 3 decades).
    pub t_grid: Vec<f64>,
    /// Radii of the local statistic (geometric, at least 3 decades).
    pub local_h_grid: Vec<f64>,
    /// Centre of the local statistic, inside `(0, 1)`.
    pub local_t0: f64,
}

fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect()
}

impl Default for PathwiseGrids {
    fn default() -> Self {
        Self {
            h_grid: (5..=10).map(|k| 2f64.powi(-k)).collect(),
            t_grid: geometric(1e2, 1e5, 31),
            local_h_grid: (4..=14).map(|k| 2f64.powi(-k)).collect(),
            local_t0: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathOptions {
    pub seed: u64,
    /// Steps covering `[0, 1]`.
    pub n_steps: usize,
    pub fbm_oversample: usize,
    pub method: LocalTimeMethod,
    /// Batches of paths for the standard errors of medians and quantiles.
    pub batches: usize,
    pub slope_abs_tol: f64,
    #[serde(skip)]
    pub threads: usize,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            n_steps: 1 << 16,
            fbm_oversample: 4,
            method: LocalTimeMethod::InverseSubordinator,
            batches: 10,
            slope_abs_tol: 0.1,
            threads: 0,
        }
    }
}

/// Per-path statistics; row i belongs to path i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathwiseSample {
    pub grids: PathwiseGrids,
    /// `sup_t sup_{0≤s≤h} |Z(t+s) − Z(t)|` per h.
    pub oscillation: Vec<Vec<f64>>,
    /// `max_{s≤t}|Z(s)| / (t^κ (log log t)^p)` per t.
    pub global: Vec<Vec<f64>>,
    /// `max_{|s|≤h}|Z(t₀+s) − Z(t₀)| / (h^κ (log log 1/h)^p)` per h.
    pub local: Vec<Vec<f64>>,
}

/// `max_{0 ≤ i ≤ n−k} max_{0 ≤ j ≤ k} |z[i+j] − z[i]|` in O(n) with monotone deques.
pub fn anchored_oscillation(z: &[f64], k: usize) -> f64 {
    if k == 0 || z.len() <= k {
        return 0.0;
    }
    let mut hi: VecDeque<usize> = VecDeque::new();
    let mut lo: VecDeque<usize> = VecDeque::new();
    let mut best = 0.0f64;
    for j in 0..z.len() {
        while hi.back().is_some_and(|&b| z[b] <= z[j]) {
            hi.pop_back();
        }
        hi.push_back(j);
        while lo.back().is_some_and(|&b| z[b] >= z[j]) {
            lo.pop_back();
        }
        lo.push_back(j);
        if j >= k {
            let i = j - k;
            while hi.front().is_some_and(|&f| f < i) {
                hi.pop_front();
            }
            while lo.front().is_some_and(|&f| f < i) {
                lo.pop_front();
            }
            let up = z[*hi.front().expect("window nonempty")] - z[i];
            let down = z[i] - z[*lo.front().expect("window nonempty")];
            best = best.max(up).max(down);
        }
    }
    best
}

fn decades(grid: &[f64]) -> f64 {
    let (lo, hi) = grid.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    (hi / lo).log10()
}

fn validate(grids: &PathwiseGrids, opts: &PathOptions) -> Result<()> {
    let dt = 1.0 / opts.n_steps as f64;
    if let Some(hmin) = grids.h_grid.iter().copied().reduce(f64::min) {
        if dt > hmin / 64.0 {
            return Err(Error::Argument(format!(
                "resolution: dt = {dt:e} exceeds min(h)/64 = {:e}; increase n_steps",
                hmin / 64.0
            )));
        }
        if grids.h_grid.iter().any(|&h| h >= 1.0) {
            return Err(Error::Argument("modulus windows must be shorter than the unit horizon".into()));
        }
    }
    for (name, g) in [("t_grid", &grids.t_grid), ("local_h_grid", &grids.local_h_grid)] {
        if !g.is_empty() && decades(g) < 3.0 - 1e-9 {
            return Err(Error::Argument(format!("{name} spans {:.2} decades; at least 3 are required", decades(g))));
        }
    }
    if grids.t_grid.iter().any(|&t| !(t > std::f64::consts::E)) {
        return Err(Error::Argument("global times must exceed e so that log log t > 0".into()));
    }
    let t0 = grids.local_t0;
    if let Some(hmax) = grids.local_h_grid.iter().copied().reduce(f64::max) {
        let hmin = grids.local_h_grid.iter().copied().fold(f64::INFINITY, f64::min);
        if !(t0 - hmax >= 0.0 && t0 + hmax <= 1.0) || hmax >= 1.0 / std::f64::consts::E {
            return Err(Error::Argument(format!("local radii up to {hmax} do not fit around t0 = {t0}")));
        }
        if hmin < 2.0 * dt {
            return Err(Error::Argument(format!("local radius {hmin:e} is below two steps")));
        }
    }
    Ok(())
}

/// Simulates `paths` paths of Z on `[0, 1]` and evaluates every grid.
pub fn pathwise_sample(m: &ModelParams, grids: &PathwiseGrids, paths: usize, opts: &PathOptions) -> Result<PathwiseSample> {
    validate(grids, opts)?;
    if paths < 2 {
        return Err(Error::Argument("need at least 2 paths".into()));
    }
    let cfg = SimConfig {
        fbm_oversample: opts.fbm_oversample,
        ..SimConfig::on_horizon(1.0, opts.n_steps, opts.seed, opts.method)
    };
    let sim = ZSimulator::new(m, &cfg)?;
    let n = opts.n_steps;
    let dt = cfg.dt;
    let kappa = m.selfsim_index();
    let pw = m.log_power();
    let t_top = grids.t_grid.iter().copied().fold(0.0, f64::max);
    let rows = parallel::map_indexed(paths, opts.threads, |i| {
        let z = sim
            .path(rng::mix(opts.seed, i as u64))
            .map_err(|e| Error::Replicate { index: i, source: Box::new(e) })?
            .z
            .values;
        let osc: Vec<f64> =
            grids.h_grid.iter().map(|&h| anchored_oscillation(&z, ((h / dt).round() as usize).max(1))).collect();
        let global: Vec<f64> = if grids.t_grid.is_empty() {
            vec![]
        } else {
            let mut run = Vec::with_capacity(z.len());
            let mut acc = 0.0f64;
            for v in &z {
                acc = acc.max(v.abs());
                run.push(acc);
            }
            grids
                .t_grid
                .iter()
                .map(|&t| {
                    let idx = ((t / t_top * n as f64).round() as usize).clamp(1, n);
                    t_top.powf(kappa) * run[idx] / (t.powf(kappa) * t.ln().ln().powf(pw))
                })
                .collect()
        };
        let i0 = (grids.local_t0 / dt).round() as usize;
        let local: Vec<f64> = grids
            .local_h_grid
            .iter()
            .map(|&h| {
                let k = (h / dt).round() as usize;
                let z0 = z[i0];
                let sup = z[i0 - k..=i0 + k].iter().fold(0.0f64, |a, &v| a.max((v - z0).abs()));
                sup / (h.powf(kappa) * (1.0 / h).ln().ln().powf(pw))
            })
            .collect();
        Ok((osc, global, local))
    })?;
    let mut s = PathwiseSample { grids: grids.clone(), oscillation: vec![], global: vec![], local: vec![] };
    for (o, g, l) in rows {
        s.oscillation.push(o);
        s.global.push(g);
        s.local.push(l);
    }
    Ok(s)
}

fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

/// Log-corrected slope: `log median osc(h) − p log log(1/h)` on `log h`.
fn modulus_slope(rows: &[Vec<f64>], h_grid: &[f64], p: f64) -> Result<(f64, f64)> {
    let x: Vec<f64> = h_grid.iter().map(|h| h.ln()).collect();
    let raw: Vec<f64> = (0..h_grid.len()).map(|j| median(&column(rows, j)).ln()).collect();
    let y: Vec<f64> = raw.iter().zip(h_grid).map(|(v, h)| v - p * (1.0 / h).ln().ln()).collect();
    let corrected = line_fit(&x, &y, None)?.slope;
    Ok((corrected, line_fit(&x, &raw, None)?.slope))
}

pub(crate) fn modulus_result(m: &ModelParams, s: &PathwiseSample, opts: &PathOptions) -> Result<CampaignResult> {
    let start = Instant::now();
    let h_grid = &s.grids.h_grid;
    if h_grid.len() < 3 {
        return Err(Error::Argument("need at least 3 window lengths".into()));
    }
    let kappa = m.selfsim_index();
    let pw = m.log_power();
    let rows = &s.oscillation;
    let (slope, raw) = modulus_slope(rows, h_grid, pw)?;
    let batch: Vec<f64> = batch_ranges(rows.len(), opts.batches)
        .into_iter()
        .map(|r| modulus_slope(&rows[r], h_grid, pw).map(|v| v.0))
        .collect::<Result<_>>()?;
    let mut c = CampaignResult::new(
        "modulus",
        json!({ "model": m, "h_grid": h_grid, "options": opts }),
        rows.len(),
    );
    c.push(Statistic::absolute("slope", slope, Some(batch_se(&batch)), kappa, opts.slope_abs_tol));
    c.push(Statistic::compare("slope_uncorrected", raw, None, kappa));

    let norm: Vec<f64> = h_grid.iter().map(|&h| h.powf(kappa) * (1.0 / h).ln().powf(pw)).collect();
    let ratios: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().zip(&norm).map(|(v, n)| v / n).collect()).collect();
    let med: Vec<f64> = (0..h_grid.len()).map(|j| median(&column(&ratios, j))).collect();
    let finite = ratios.iter().flatten().all(|v| v.is_finite() && *v > 0.0);
    c.push(Statistic::holds("ratio_positive_finite", finite, "normalized modulus positive and finite for all h"));
    c.push(Statistic::info("ratio_median_max", med.iter().copied().fold(0.0, f64::max), None));
    c.push(Statistic::info(
        "ratio_path_max",
        ratios.iter().flatten().copied().fold(0.0, f64::max),
        None,
    ));
    // the three smallest windows: the normalized modulus must not grow as h ↓ 0
    let mut idx: Vec<usize> = (0..h_grid.len()).collect();
    idx.sort_by(|&a, &b| h_grid[a].total_cmp(&h_grid[b]));
    let last: Vec<usize> = idx[..3].to_vec();
    let tx: Vec<f64> = last.iter().map(|&j| (1.0 / h_grid[j]).ln()).collect();
    let ty: Vec<f64> = last.iter().map(|&j| med[j]).collect();
    let trend = line_fit(&tx, &ty, None)?;
    c.push(Statistic::band(
        "ratio_trend_smallest_h",
        trend.slope,
        Some(trend.slope_se),
        None,
        f64::NEG_INFINITY,
        0.0,
        "median normalized modulus nonincreasing over the three smallest h",
    ));
    Ok(c.finish(start))
}

/// Slope of the 99th percentile of `rows[:, j]` against `x_j` over `sel`.
fn q99_trend(rows: &[Vec<f64>], xs: &[f64], sel: &[usize]) -> Result<f64> {
    let x: Vec<f64> = sel.iter().map(|&j| xs[j]).collect();
    let y: Vec<f64> = sel.iter().map(|&j| quantile_sorted(&sorted(&column(rows, j)), 0.99)).collect();
    Ok(line_fit(&x, &y, None)?.slope)
}

fn sup_per_path(rows: &[Vec<f64>]) -> Vec<f64> {
    sorted(&rows.iter().map(|r| r.iter().copied().fold(0.0, f64::max)).collect::<Vec<_>>())
}

pub(crate) fn lil_result(m: &ModelParams, s: &PathwiseSample, mode: LilMode, a8: Option<f64>, opts: &PathOptions) -> Result<CampaignResult> {
    let start = Instant::now();
    let (rows, grid, name) = match mode {
        LilMode::Global => (&s.global, &s.grids.t_grid, "lil_global"),
        LilMode::Local => (&s.local, &s.grids.local_h_grid, "lil_local"),
    };
    if grid.len() < 3 {
        return Err(Error::Argument("LIL grid needs at least 3 points".into()));
    }
    // position on a log10 axis pointing towards the limit
    let xs: Vec<f64> = match mode {
        LilMode::Global => grid.iter().map(|t| t.log10()).collect(),
        LilMode::Local => grid.iter().map(|h| (1.0 / h).log10()).collect(),
    };
    let x_max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let x_min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let last: Vec<usize> = (0..xs.len()).filter(|&j| xs[j] >= x_max - 1.0 - 1e-9).collect();
    let first: Vec<usize> = (0..xs.len()).filter(|&j| xs[j] <= x_min + 1.0 + 1e-9).collect();
    if last.len() < 2 {
        return Err(Error::Argument("the outermost decade needs at least 2 grid points".into()));
    }

    let mut c = CampaignResult::new(
        name,
        json!({ "model": m, "mode": mode, "grid": grid, "local_t0": s.grids.local_t0, "options": opts }),
        rows.len(),
    );
    let nonneg = rows.iter().flatten().all(|v| *v >= 0.0 && v.is_finite());
    c.push(Statistic::holds("statistic_nonnegative", nonneg, "statistic ≥ 0 and finite"));
    let sups = sup_per_path(rows);
    let (q99, q99_se) = quantile_with_se(&sups, 0.99);
    c.push(Statistic::info("sup_q99", q99, Some(q99_se)));
    c.push(Statistic::info("sup_median", quantile_sorted(&sups, 0.5), None));

    let trend = q99_trend(rows, &xs, &last)?;
    let batch: Vec<f64> = batch_ranges(rows.len(), opts.batches)
        .into_iter()
        .map(|r| q99_trend(&rows[r], &xs, &last))
        .collect::<Result<_>>()?;
    let se = batch_se(&batch);
    c.push(Statistic::band(
        "q99_trend_outer_decade",
        trend,
        Some(se),
        Some(0.0),
        f64::NEG_INFINITY,
        2.0 * se,
        "99th percentile not trending upward over the outermost decade (slope ≤ 2 SE)",
    ));

    match mode {
        LilMode::Global => {
            let pooled = |sel: &[usize]| median(&sel.iter().flat_map(|&j| column(rows, j)).collect::<Vec<_>>());
            let ratio = pooled(&last) / pooled(&first);
            c.push(Statistic::band("median_ratio_last_first_decade", ratio, None, Some(1.0), 0.5, 2.0, "in [0.5, 2]"));
        }
        LilMode::Local => {
            if !s.global.is_empty() && !s.global[0].is_empty() {
                let g = sup_per_path(&s.global);
                let (gq, gse) = quantile_with_se(&g, 0.99);
                let joint = (q99_se * q99_se + gse * gse).sqrt();
                c.push(Statistic::band(
                    "local_minus_global_q99",
                    q99 - gq,
                    Some(joint),
                    None,
                    f64::NEG_INFINITY,
                    3.0 * joint,
                    "local 99th percentile not above the global one beyond 3 joint SE",
                ));
            }
        }
    }
    if let Some(a8) = a8 {
        c.push(Statistic::info("a8_bound", a8.powf(-m.log_power()), None));
    }
    Ok(c.finish(start))
}

/// Modulus campaign: per-path double-sup statistic over `h_grid`, its
/// log-corrected regression slope against `log h`, and the normalized ratio.
pub fn verify_modulus(m: &ModelParams, h_grid: &[f64], paths: usize, opts: &PathOptions) -> Result<CampaignResult> {
    let grids = PathwiseGrids { h_grid: h_grid.to_vec(), t_grid: vec![], local_h_grid: vec![], ..PathwiseGrids::default() };
    modulus_result(m, &pathwise_sample(m, &grids, paths, opts)?, opts)
}

/// LIL campaign. `grid` holds times (global) or radii (local); the local
/// mode also evaluates the default global statistic on the same paths for
/// comparison. `a8`, when known, is reported as `A₈^(−(α+2H)/(2α))`.
pub fn verify_lil(m: &ModelParams, grid: &[f64], paths: usize, mode: LilMode, a8: Option<f64>, opts: &PathOptions) -> Result<CampaignResult> {
    let d = PathwiseGrids::default();
    let grids = match mode {
        LilMode::Global => PathwiseGrids { h_grid: vec![], t_grid: grid.to_vec(), local_h_grid: vec![], ..d },
        LilMode::Local => PathwiseGrids { h_grid: vec![], local_h_grid: grid.to_vec(), ..d },
    };
    lil_result(m, &pathwise_sample(m, &grids, paths, opts)?, mode, a8, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(z: &[f64], k: usize) -> f64 {
        let mut best = 0.0f64;
        for i in 0..z.len() - k {
            for j in 0..=k {
                best = best.max((z[i + j] - z[i]).abs());
            }
        }
        best
    }

    #[test]
    fn oscillation_matches_brute_force() {
        let z: Vec<f64> = (0..200).map(|i| ((i * 37 % 101) as f64).sin() * (i as f64).sqrt()).collect();
        for k in [1, 2, 5, 17, 60, 199] {
            assert_eq!(anchored_oscillation(&z, k), brute(&z, k), "k = {k}");
        }
        assert_eq!(anchored_oscillation(&z, 200), 0.0);
    }

    #[test]
    fn grids_are_validated() {
        let m = ModelParams::gaussian_anchor();
        let o = PathOptions { n_steps: 1 << 10, ..PathOptions::default() };
        // dt = 2^-10 is too coarse for h = 2^-10
        assert!(verify_modulus(&m, &[2f64.powi(-5), 2f64.powi(-10)], 10, &o).is_err());
        assert!(verify_lil(&m, &[1e2, 1e3], 10, LilMode::Global, None, &o).is_err());
        let short: Vec<f64> = (2..=8).map(|k| 2f64.powi(-k)).collect();
        assert!(verify_lil(&m, &short, 10, LilMode::Local, None, &o).is_err());
    }

    #[test]
    fn small_anchor_run() {
        let m = ModelParams::gaussian_anchor();
        let o = PathOptions { n_steps: 1 << 14, ..PathOptions::default() };
        let grids = PathwiseGrids {
            h_grid: (3..=6).map(|k| 2f64.powi(-k)).collect(),
            local_h_grid: (3..=13).map(|k| 2f64.powi(-k)).collect(),
            ..PathwiseGrids::default()
        };
        let s = pathwise_sample(&m, &grids, 200, &o).unwrap();
        let md = modulus_result(&m, &s, &o).unwrap();
        assert!(md.stat("ratio_positive_finite").unwrap().pass.unwrap());
        let slope = md.stat("slope").unwrap().estimate;
        assert!(slope > 0.1 && slope < 0.5, "{slope}");
        let g = lil_result(&m, &s, LilMode::Global, Some(1.0), &o).unwrap();
        assert!(g.stat("statistic_nonnegative").unwrap().pass.unwrap());
        assert_eq!(g.stat("a8_bound").unwrap().estimate, 1.0);
        let l = lil_result(&m, &s, LilMode::Local, None, &o).unwrap();
        assert!(l.stat("local_minus_global_q99").is_some());
    }

    #[test]
    fn worker_count_does_not_matter() {
        let m = ModelParams::from_parts(1.5, 0.0, 1.0, 0.5).unwrap();
        let o = PathOptions { n_steps: 1 << 9, ..PathOptions::default() };
        let h: Vec<f64> = vec![2f64.powi(-3)];
        let grids = PathwiseGrids { h_grid: h, t_grid: vec![], local_h_grid: vec![], ..PathwiseGrids::default() };
        let a = pathwise_sample(&m, &grids, 20, &PathOptions { threads: 1, ..o.clone() }).unwrap();
        let b = pathwise_sample(&m, &grids, 20, &PathOptions { threads: 4, ..o }).unwrap();
        assert_eq!(a, b);
    }
}
