//! Monte Carlo campaigns that confront simulated output with the closed forms
//! of [`model`](crate::model) and the growth estimates of
//! [`growth`](crate::growth).
//!
//! Every campaign returns a [`CampaignResult`]: a list of [`Statistic`]s, each
//! an estimate with its standard error, the model target it is judged
//! against, and a verdict that is a pure function of those numbers. Results
//! depend only on parameters, options and the master seed; replicate `i` of a
//! campaign always draws from `rng::stream(seed, i)` and reductions run in
//! index order, so the worker count never changes a single bit.

mod identities;
mod ldp;
mod moments;
mod pathwise;
mod suite;
mod tails;

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::{io, Result};

pub use identities::{closed_form_identities, davies_invariance, gaussian_anchor_constants, valiron_recovery};
pub use ldp::{conjugacy_check, verify_ldp_interval, verify_mgf, LdpOptions, MgfOptions};
pub use moments::{estimator_agreement, verify_moments, MomentOptions};
pub use pathwise::{
    anchored_oscillation, pathwise_sample, verify_lil, verify_modulus, LilMode, PathOptions, PathwiseGrids,
    PathwiseSample,
};
pub use suite::{run_all, AllConfig, Report, CRITERIA, REPORT_SCHEMA};
pub use tails::{
    quasi_superadditivity, verify_lt_tail, verify_max_tail, verify_tail, MaxTailOptions, TailOptions,
};

/// One estimate and its verdict.
///
/// `lower`/`upper` describe the acceptance band (already including any
/// standard-error allowance), `target` the model value the band is built
/// around. Statistics without a verdict (`pass = None`) are diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statistic {
    pub name: String,
    pub estimate: f64,
    pub se: Option<f64>,
    pub target: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub rule: String,
    pub pass: Option<bool>,
}

impl Statistic {
    /// A reported number with no verdict.
    pub fn info(name: &str, estimate: f64, se: Option<f64>) -> Self {
        Self {
            name: name.to_string(),
            estimate,
            se,
            target: None,
            lower: None,
            upper: None,
            rule: "reported".into(),
            pass: None,
        }
    }

    /// Diagnostic with a model target but no verdict.
    pub fn compare(name: &str, estimate: f64, se: Option<f64>, target: f64) -> Self {
        Self { target: Some(target), rule: "diagnostic".into(), ..Self::info(name, estimate, se) }
    }

    /// `lower ≤ estimate ≤ upper`.
    pub fn band(name: &str, estimate: f64, se: Option<f64>, target: Option<f64>, lower: f64, upper: f64, rule: &str) -> Self {
        Self {
            name: name.to_string(),
            estimate,
            se,
            target,
            lower: Some(lower),
            upper: Some(upper),
            rule: rule.to_string(),
            pass: Some(estimate >= lower && estimate <= upper),
        }
    }

    /// `|estimate/target − 1| ≤ rel`.
    pub fn relative(name: &str, estimate: f64, se: Option<f64>, target: f64, rel: f64) -> Self {
        let (lo, hi) = sorted_pair(target * (1.0 - rel), target * (1.0 + rel));
        Self::band(name, estimate, se, Some(target), lo, hi, &format!("within {rel} relative"))
    }

    /// `|estimate − target| ≤ tol`.
    pub fn absolute(name: &str, estimate: f64, se: Option<f64>, target: f64, tol: f64) -> Self {
        Self::band(name, estimate, se, Some(target), target - tol, target + tol, &format!("within {tol} absolute"))
    }

    /// `|estimate − target| ≤ k·se`.
    pub fn within_se(name: &str, estimate: f64, se: f64, target: f64, k: f64) -> Self {
        Self::band(name, estimate, Some(se), Some(target), target - k * se, target + k * se, &format!("within {k} SE"))
    }

    /// `estimate ≤ upper` (e.g. a worst-case error).
    pub fn at_most(name: &str, estimate: f64, upper: f64) -> Self {
        Self {
            upper: Some(upper),
            rule: format!("at most {upper}"),
            pass: Some(estimate <= upper),
            ..Self::info(name, estimate, None)
        }
    }

    /// A boolean property; the estimate is 1 when it holds.
    pub fn holds(name: &str, ok: bool, rule: &str) -> Self {
        Self {
            rule: rule.to_string(),
            pass: Some(ok),
            ..Self::info(name, if ok { 1.0 } else { 0.0 }, None)
        }
    }
}

fn sorted_pair(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Outcome of one campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub name: String,
    pub params: serde_json::Value,
    pub sample_size: usize,
    pub stats: Vec<Statistic>,
    /// Warnings (undersampling, truncation); never affect the verdict.
    pub notes: Vec<String>,
    pub pass: bool,
    /// Kept out of serialized reports, which must be reproducible.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl CampaignResult {
    pub(crate) fn new(name: &str, params: serde_json::Value, sample_size: usize) -> Self {
        Self { name: name.to_string(), params, sample_size, stats: vec![], notes: vec![], pass: true, wall_time_s: 0.0 }
    }

    pub(crate) fn push(&mut self, s: Statistic) {
        self.stats.push(s);
    }

    pub(crate) fn note(&mut self, msg: String) {
        self.notes.push(msg);
    }

    /// Sets the overall verdict and the elapsed time since `start`.
    pub(crate) fn finish(mut self, start: Instant) -> Self {
        self.pass = self.stats.iter().all(|s| s.pass != Some(false));
        self.wall_time_s = start.elapsed().as_secs_f64();
        self
    }

    pub fn stat(&self, name: &str) -> Option<&Statistic> {
        self.stats.iter().find(|s| s.name == name)
    }

    pub fn failures(&self) -> Vec<&Statistic> {
        self.stats.iter().filter(|s| s.pass == Some(false)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        io::json_string(self)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        io::write_json(path, self)
    }

    /// Flat CSV rows `campaign,statistic,estimate,se,target,lower,upper,pass`.
    pub fn csv_rows(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map(io::fmt_f64).unwrap_or_default();
        self.stats
            .iter()
            .map(|s| {
                let pass = match s.pass {
                    Some(true) => "true",
                    Some(false) => "false",
                    None => "",
                };
                format!(
                    "{},{},{},{},{},{},{},{}",
                    self.name,
                    s.name,
                    io::fmt_f64(s.estimate),
                    opt(s.se),
                    opt(s.target),
                    opt(s.lower),
                    opt(s.upper),
                    pass
                )
            })
            .collect()
    }
}

pub const CSV_HEADER: &str = "campaign,statistic,estimate,se,target,lower,upper,pass";

pub fn campaigns_csv(results: &[CampaignResult]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in results {
        for row in r.csv_rows() {
            out.push_str(&row);
            out.push('\n');
        }
    }
    out
}

/// Standard error of a statistic from `batches` contiguous batches:
/// `sd(batch values)/√batches`.
pub(crate) fn batch_se(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if values.len() < 2 {
        return f64::NAN;
    }
    let m = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
}

/// Contiguous ranges splitting `0..n` into `b` nearly equal parts.
pub(crate) fn batch_ranges(n: usize, b: usize) -> Vec<std::ops::Range<usize>> {
    let b = b.clamp(1, n.max(1));
    (0..b).map(|k| (k * n / b)..((k + 1) * n / b)).collect()
}

/// Sample quantile with an order-statistic standard error: half the spread
/// of the order statistics one binomial standard deviation either side.
pub(crate) fn quantile_with_se(sorted: &[f64], q: f64) -> (f64, f64) {
    let n = sorted.len();
    let est = crate::stats::quantile_sorted(sorted, q);
    let d = (n as f64 * q * (1.0 - q)).sqrt();
    let k = q * (n - 1) as f64;
    let lo = sorted[((k - d).floor().max(0.0)) as usize];
    let hi = sorted[((k + d).ceil() as usize).min(n - 1)];
    (est, 0.5 * (hi - lo))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_is_all_of_the_checked_statistics() {
        let mut c = CampaignResult::new("c", serde_json::json!({}), 1);
        c.push(Statistic::info("x", 1.0, None));
        c.push(Statistic::relative("y", 1.1, Some(0.01), 1.0, 0.2));
        let c = c.finish(Instant::now());
        assert!(c.pass);
        let mut d = c.clone();
        d.push(Statistic::absolute("z", 3.0, None, 1.0, 0.5));
        let d = d.finish(Instant::now());
        assert!(!d.pass);
        assert_eq!(d.failures().len(), 1);
    }

    #[test]
    fn relative_band_handles_negative_targets() {
        let s = Statistic::relative("s", -1.1, None, -1.0, 0.25);
        assert_eq!(s.pass, Some(true));
        assert!(s.lower.unwrap() < s.upper.unwrap());
    }

    #[test]
    fn csv_has_one_row_per_statistic() {
        let mut c = CampaignResult::new("c", serde_json::json!({"a": 1}), 1);
        c.push(Statistic::within_se("m", 1.0, 0.1, 1.05, 3.0));
        c.push(Statistic::holds("h", false, "must hold"));
        let csv = campaigns_csv(&[c]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("c,m,1.0000000000000000e0,"));
        assert!(lines[2].ends_with(",false"));
    }

    #[test]
    fn wall_time_is_not_serialized() {
        let mut c = CampaignResult::new("c", serde_json::json!({}), 1);
        c.wall_time_s = 12.5;
        assert!(!c.to_json().unwrap().contains("wall"));
    }

    #[test]
    fn batches_cover_everything() {
        let r = batch_ranges(103, 10);
        assert_eq!(r.len(), 10);
        assert_eq!(r[0].start, 0);
        assert_eq!(r[9].end, 103);
        assert!(r.windows(2).all(|w| w[0].end == w[1].start));
    }

    #[test]
    fn quantile_se_shrinks_with_sample_size() {
        let small: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        let big: Vec<f64> = (0..10000).map(|i| i as f64 / 10000.0).collect();
        let (q1, s1) = quantile_with_se(&small, 0.9);
        let (q2, s2) = quantile_with_se(&big, 0.9);
        assert!((q1 - 0.9).abs() < 0.02 && (q2 - 0.9).abs() < 0.001);
        assert!(s2 < s1 / 5.0);
    }
}
