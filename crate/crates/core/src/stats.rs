//! Estimators and regressions shared by the verification campaigns.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::special::log_sum_exp;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

/// Sample mean with the standard error of the mean (unbiased variance).
pub fn mean_se(xs: &[f64]) -> MeanSe {
    let n = xs.len();
    if n == 0 {
        return MeanSe { mean: f64::NAN, se: f64::NAN, n };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return MeanSe { mean, se: f64::INFINITY, n };
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    MeanSe { mean, se: (var / n as f64).sqrt(), n }
}

/// Type-7 (linear interpolation) quantile of an ascending sample.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(xs: &[f64]) -> f64 {
    quantile_sorted(&sorted(xs), 0.5)
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (a, b) = (sorted(a), sorted(b));
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    (d, kolmogorov_sf(lambda))
}

/// Survival function of the Kolmogorov distribution.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Ordinary or weighted least squares on an arbitrary design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
    pub r2: f64,
    pub rss: f64,
    pub n: usize,
}

/// Weighted least squares `y ≈ X c` with weights `w` (None = unit weights),
/// solved through SVD of the √w-scaled design.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64], w: Option<&[f64]>) -> Result<LinearFit> {
    let n = y.len();
    let k = rows.first().map_or(0, |r| r.len());
    if n != rows.len() || k == 0 || n <= k {
        return Err(Error::InsufficientData(format!("{n} points for {k} coefficients")));
    }
    let sw: Vec<f64> = (0..n).map(|i| w.map_or(1.0, |w| w[i]).sqrt()).collect();
    let x = DMatrix::from_fn(n, k, |i, j| rows[i][j] * sw[i]);
    let yv = DVector::from_fn(n, |i, _| y[i] * sw[i]);
    let svd = x.clone().svd(true, true);
    let c = svd
        .solve(&yv, 1e-13)
        .map_err(|e| Error::NonConvergence(format!("least squares: {e}")))?;
    let resid = &yv - &x * &c;
    let rss = resid.norm_squared();
    let wsum: f64 = sw.iter().map(|s| s * s).sum();
    let ybar = (0..n).map(|i| sw[i] * sw[i] * y[i]).sum::<f64>() / wsum;
    let tss: f64 = (0..n).map(|i| sw[i] * sw[i] * (y[i] - ybar).powi(2)).sum();
    let sigma2 = rss / (n - k) as f64;
    let se = match (x.transpose() * &x).try_inverse() {
        Some(inv) => (0..k).map(|j| (inv[(j, j)] * sigma2).max(0.0).sqrt()).collect(),
        None => vec![f64::NAN; k],
    };
    let r2 = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    Ok(LinearFit { coef: c.iter().copied().collect(), se, r2, rss, n })
}

/// Straight line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub r2: f64,
}

pub fn line_fit(x: &[f64], y: &[f64], w: Option<&[f64]>) -> Result<LineFit> {
    let rows: Vec<Vec<f64>> = x.iter().map(|&xi| vec![1.0, xi]).collect();
    let f = least_squares(&rows, y, w)?;
    Ok(LineFit { slope: f.coef[1], intercept: f.coef[0], slope_se: f.se[1], r2: f.r2 })
}

/// Empirical log-MGF `log (1/n) Σ exp(v_i)` with a jackknife standard error
/// and bias estimate (the estimator is biased low by Jensen).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogMeanExp {
    pub value: f64,
    pub se: f64,
    pub jackknife_bias: f64,
    /// Effective number of samples carrying the mean, `(Σw)²/Σw²` with `w = e^{v}`.
    pub effective_n: f64,
}

/// Jackknife over `blocks` contiguous groups (delete-one-group).
pub fn log_mean_exp(v: &[f64], blocks: usize) -> Result<LogMeanExp> {
    let n = v.len();
    let g = blocks.min(n);
    if g < 2 {
        return Err(Error::InsufficientData(format!("log-mean-exp needs 2 samples, got {n}")));
    }
    let full = log_sum_exp(v) - (n as f64).ln();
    let size = n / g;
    let mut block_lse = Vec::with_capacity(g);
    let mut counts = Vec::with_capacity(g);
    for b in 0..g {
        let lo = b * size;
        let hi = if b == g - 1 { n } else { lo + size };
        block_lse.push(log_sum_exp(&v[lo..hi]));
        counts.push(hi - lo);
    }
    let total = log_sum_exp(&block_lse);
    let loo: Vec<f64> = (0..g)
        .map(|b| {
            let rest = total + (-(block_lse[b] - total).exp()).ln_1p();
            rest - ((n - counts[b]) as f64).ln()
        })
        .collect();
    let gm = loo.iter().sum::<f64>() / g as f64;
    let gf = g as f64;
    let var = (gf - 1.0) / gf * loo.iter().map(|x| (x - gm).powi(2)).sum::<f64>();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s1: f64 = v.iter().map(|x| (x - max).exp()).sum();
    let s2: f64 = v.iter().map(|x| (2.0 * (x - max)).exp()).sum();
    Ok(LogMeanExp {
        value: full,
        se: var.sqrt(),
        jackknife_bias: (gf - 1.0) * (gm - full),
        effective_n: s1 * s1 / s2,
    })
}

/// Points `(x, log S(x), weight)` of a survival curve on which tails are fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalPoints {
    pub x: Vec<f64>,
    pub log_s: Vec<f64>,
    pub weight: Vec<f64>,
}

/// Complementary-rank log-survival of the sample at `m` order statistics
/// spread evenly in log-survival over the quantile window `[q_lo, q_hi]`.
///
/// Weights are `n S`, the inverse of the asymptotic variance of `log Ŝ`.
pub fn rank_survival(sorted_sample: &[f64], q_lo: f64, q_hi: f64, m: usize) -> Result<SurvivalPoints> {
    let n = sorted_sample.len();
    let top = ((1.0 - q_hi) * n as f64).floor() as usize;
    if top < 50 {
        return Err(Error::InsufficientData(format!(
            "only {top} exceedances above the {q_hi} quantile; need at least 50"
        )));
    }
    let mut pts = SurvivalPoints { x: vec![], log_s: vec![], weight: vec![] };
    let (l0, l1) = ((1.0 - q_lo).ln(), (1.0 - q_hi).ln());
    let mut last = usize::MAX;
    for j in 0..m {
        let ls = l0 + (l1 - l0) * j as f64 / (m - 1) as f64;
        let k = (ls.exp() * n as f64).round() as usize; // number of points strictly above
        if k == last || k == 0 || k >= n {
            continue;
        }
        last = k;
        let s = k as f64 / n as f64;
        pts.x.push(sorted_sample[n - k - 1]);
        pts.log_s.push(s.ln());
        pts.weight.push(k as f64);
    }
    Ok(pts)
}

/// Result of fitting `log S(x) ≈ c₀ − B x^κ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub exponent: f64,
    pub constant: f64,
    pub intercept: f64,
    pub constant_se: f64,
    pub r2: f64,
}

fn fit_fixed(p: &SurvivalPoints, kappa: f64) -> Result<TailFit> {
    let xs: Vec<f64> = p.x.iter().map(|x| x.powf(kappa)).collect();
    let f = line_fit(&xs, &p.log_s, Some(&p.weight))?;
    Ok(TailFit { exponent: kappa, constant: -f.slope, intercept: f.intercept, constant_se: f.slope_se, r2: f.r2 })
}

/// Fixed-exponent fit: the slope of log-survival against `x^κ`.
pub fn tail_fit_fixed(p: &SurvivalPoints, kappa: f64) -> Result<TailFit> {
    fit_fixed(p, kappa)
}

/// Free-exponent fit: profiles the weighted residual sum of squares over κ.
pub fn tail_fit_free(p: &SurvivalPoints, kappa_lo: f64, kappa_hi: f64) -> Result<TailFit> {
    let rss = |k: f64| -> f64 {
        let xs: Vec<f64> = p.x.iter().map(|x| x.powf(k)).collect();
        line_fit(&xs, &p.log_s, Some(&p.weight)).map_or(f64::INFINITY, |f| {
            // weighted residuals, recomputed directly
            xs.iter()
                .zip(&p.log_s)
                .zip(&p.weight)
                .map(|((x, y), w)| w * (y - f.intercept - f.slope * x).powi(2))
                .sum()
        })
    };
    let n = 120;
    let grid: Vec<f64> = (0..=n).map(|i| kappa_lo + (kappa_hi - kappa_lo) * i as f64 / n as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&k| rss(k)).collect();
    let (bi, _) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::InsufficientData("empty exponent grid".into()))?;
    let (mut lo, mut hi) = (grid[bi.saturating_sub(1)], grid[(bi + 1).min(n)]);
    const G: f64 = 0.618_033_988_749_894_9;
    for _ in 0..80 {
        let c = hi - G * (hi - lo);
        let d = lo + G * (hi - lo);
        if rss(c) <= rss(d) {
            hi = d;
        } else {
            lo = c;
        }
    }
    fit_fixed(p, 0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_distr::{Exp1, StandardNormal};

    #[test]
    fn mean_and_se() {
        let m = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_relative_eq!(m.mean, 2.5);
        assert_relative_eq!(m.se, (5.0f64 / 3.0 / 4.0).sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn quantiles() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&s, 0.5), 3.0);
        assert_eq!(quantile_sorted(&s, 0.125), 1.5);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    }

    #[test]
    fn ks_accepts_same_law_rejects_shift() {
        let mut r = crate::rng::stream(2, 0);
        let a: Vec<f64> = (0..4000).map(|_| r.sample(StandardNormal)).collect();
        let b: Vec<f64> = (0..4000).map(|_| r.sample(StandardNormal)).collect();
        let c: Vec<f64> = b.iter().map(|x| x + 0.2).collect();
        let (d, p) = ks_two_sample(&a, &b);
        assert!(p > 0.01, "{d} {p}");
        assert!(ks_two_sample(&a, &c).1 < 1e-6);
    }

    #[test]
    fn regression_recovers_coefficients() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![1.0, i as f64, (i as f64).ln_1p()]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 2.0 - 0.5 * r[1] + 3.0 * r[2]).collect();
        let f = least_squares(&rows, &y, None).unwrap();
        assert_relative_eq!(f.coef[0], 2.0, epsilon = 1e-10);
        assert_relative_eq!(f.coef[1], -0.5, epsilon = 1e-10);
        assert_relative_eq!(f.coef[2], 3.0, epsilon = 1e-10);
        assert_relative_eq!(f.r2, 1.0, epsilon = 1e-12);
        assert!(least_squares(&rows[..2], &y[..2], None).is_err());
    }

    #[test]
    fn log_mean_exp_of_gaussian() {
        // log E e^{N} = 1/2
        let mut r = crate::rng::stream(3, 0);
        let v: Vec<f64> = (0..200_000).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let l = log_mean_exp(&v, 50).unwrap();
        assert!((l.value - 0.5).abs() < 4.0 * l.se, "{l:?}");
        assert!(l.effective_n > 10_000.0);
        let c = log_mean_exp(&[0.0; 10], 5).unwrap();
        assert_eq!(c.value, 0.0);
        assert_eq!(c.se, 0.0);
    }

    #[test]
    fn tail_fits_on_exact_survival() {
        // S(x) = exp(−2 x^1.5) exactly
        let x: Vec<f64> = (1..60).map(|i| 0.5 + i as f64 * 0.05).collect();
        let p = SurvivalPoints {
            log_s: x.iter().map(|x| -2.0 * x.powf(1.5)).collect(),
            weight: vec![1.0; x.len()],
            x,
        };
        let f = tail_fit_free(&p, 0.5, 3.0).unwrap();
        assert_relative_eq!(f.exponent, 1.5, max_relative = 1e-6);
        assert_relative_eq!(f.constant, 2.0, max_relative = 1e-5);
        let g = tail_fit_fixed(&p, 1.5).unwrap();
        assert_relative_eq!(g.constant, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn rank_survival_on_exponential_sample() {
        let mut r = crate::rng::stream(9, 0);
        let v: Vec<f64> = (0..200_000).map(|_| r.sample::<f64, _>(Exp1)).collect();
        let s = sorted(&v);
        let p = rank_survival(&s, 0.9, 0.999, 40).unwrap();
        assert!(p.log_s.windows(2).all(|w| w[1] < w[0]));
        assert!(p.x.windows(2).all(|w| w[1] >= w[0]));
        let f = tail_fit_fixed(&p, 1.0).unwrap();
        assert!((f.constant - 1.0).abs() < 0.05, "{f:?}");
        assert!(rank_survival(&s[..1000], 0.9, 0.99, 10).is_err());
    }
}
