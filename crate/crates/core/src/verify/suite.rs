//! The full acceptance suite and its report.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::identities::{closed_form_identities, davies_invariance, gaussian_anchor_constants, valiron_recovery};
use super::ldp::{conjugacy_check, verify_ldp_interval, verify_mgf, LdpOptions, MgfOptions};
use super::moments::{estimator_agreement, verify_moments, MomentOptions};
use super::pathwise::{lil_result, modulus_result, pathwise_sample, LilMode, PathOptions, PathwiseGrids};
use super::tails::{verify_lt_tail, verify_max_tail, verify_tail, MaxTailOptions, TailOptions};
use super::{campaigns_csv, CampaignResult};
use crate::model::ModelParams;
use crate::simulate::LocalTimeMethod;
use crate::{io, rng, Result};

pub const REPORT_SCHEMA: &str = "ltfbm-report/1";

/// Sizes of every campaign in the suite. The defaults are the acceptance
/// sizes; [`AllConfig::quick`] is a smoke-test variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AllConfig {
    pub seed: u64,
    pub moment_reps: usize,
    pub occupation_steps: usize,
    pub subordinator_steps: usize,
    pub tail_reps: usize,
    pub tail_window: (f64, f64),
    pub mgf_reps: usize,
    pub ldp_reps: usize,
    pub max_tail_reps: usize,
    pub max_tail_steps: usize,
    pub max_tail_window: (f64, f64),
    pub paths: usize,
    pub path_steps: usize,
    pub path_grids: PathwiseGrids,
    #[serde(skip)]
    pub threads: usize,
}

impl Default for AllConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_601,
            moment_reps: 100_000,
            occupation_steps: 1 << 16,
            subordinator_steps: 1 << 14,
            tail_reps: 1_000_000,
            tail_window: (0.99, 0.9999),
            mgf_reps: 1_000_000,
            ldp_reps: 1_000_000,
            max_tail_reps: 100_000,
            max_tail_steps: 1 << 10,
            max_tail_window: (0.9, 0.999),
            paths: 2000,
            path_steps: 1 << 16,
            path_grids: PathwiseGrids::default(),
            threads: 0,
        }
    }
}

impl AllConfig {
    /// A configuration that runs in seconds; verdicts are not meaningful.
    pub fn quick() -> Self {
        Self {
            moment_reps: 10_000,
            occupation_steps: 1 << 10,
            subordinator_steps: 1 << 10,
            tail_reps: 100_000,
            tail_window: (0.99, 0.999),
            mgf_reps: 20_000,
            ldp_reps: 20_000,
            max_tail_reps: 10_000,
            max_tail_steps: 128,
            max_tail_window: (0.9, 0.99),
            paths: 40,
            path_steps: 1 << 14,
            path_grids: PathwiseGrids {
                h_grid: (4..=8).map(|k| 2f64.powi(-k)).collect(),
                local_h_grid: (3..=13).map(|k| 2f64.powi(-k)).collect(),
                ..PathwiseGrids::default()
            },
            ..Self::default()
        }
    }
}

/// Versioned container of campaign results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub seed: u64,
    pub campaigns: Vec<CampaignResult>,
    pub all_pass: bool,
}

impl Report {
    pub fn new(seed: u64, campaigns: Vec<CampaignResult>) -> Self {
        let all_pass = campaigns.iter().all(|c| c.pass);
        Self { schema: REPORT_SCHEMA.into(), seed, campaigns, all_pass }
    }

    pub fn campaign(&self, name: &str) -> Option<&CampaignResult> {
        self.campaigns.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        io::json_string(self)
    }

    pub fn to_csv(&self) -> String {
        campaigns_csv(&self.campaigns)
    }

    /// Writes `report.json` and `report.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()?)?;
        std::fs::write(dir.join("report.csv"), self.to_csv())?;
        Ok(())
    }

    /// Wall time per campaign in seconds; not part of the serialized report.
    pub fn timings(&self) -> Vec<(String, f64)> {
        self.campaigns.iter().map(|c| (c.name.clone(), c.wall_time_s)).collect()
    }
}

fn named(mut c: CampaignResult, name: &str) -> CampaignResult {
    c.name = name.to_string();
    c
}

/// Campaigns making up each acceptance criterion, with the runtime budget in
/// seconds (summed over the campaigns).
pub const CRITERIA: [(u32, &[&str], f64); 8] = [
    (1, &["closed_form_identities"], 1.0),
    (2, &["davies_invariance"], 1.0),
    (3, &["gaussian_anchor"], 1.0),
    (4, &["valiron_recovery"], 30.0),
    (
        5,
        &[
            "moments_anchor_occupation",
            "moments_anchor_subordinator",
            "lt_estimator_agreement",
            "moments_interval_alpha2",
            "moments_interval_alpha1.5",
        ],
        300.0,
    ),
    (6, &["tail_anchor", "lt_tail_anchor"], 600.0),
    (
        7,
        &[
            "max_tail_anchor",
            "modulus_anchor",
            "lil_global_anchor",
            "lil_local_anchor",
            "modulus_alpha1.5",
            "lil_global_alpha1.5",
            "lil_local_alpha1.5",
        ],
        900.0,
    ),
    (8, &[], f64::INFINITY),
];

/// Runs every campaign. Each campaign's seed is derived from `cfg.seed` and
/// its position, so campaigns never share random numbers.
pub fn run_all(cfg: &AllConfig) -> Result<Report> {
    let anchor = ModelParams::gaussian_anchor();
    let stable15 = ModelParams::from_parts(1.5, 0.0, 1.0, 0.5)?;
    let seed = |k: u64| rng::mix(cfg.seed, k);
    let t = cfg.threads;
    let mut out = vec![
        closed_form_identities()?,
        davies_invariance()?,
        gaussian_anchor_constants()?,
        valiron_recovery()?,
    ];

    let occ = MomentOptions {
        seed: seed(5),
        method: LocalTimeMethod::Occupation,
        n_steps: cfg.occupation_steps,
        threads: t,
        ..MomentOptions::default()
    };
    let sub = MomentOptions {
        seed: seed(6),
        method: LocalTimeMethod::InverseSubordinator,
        n_steps: cfg.subordinator_steps,
        threads: t,
        ..MomentOptions::default()
    };
    let m_occ = named(verify_moments(&anchor, 0.0, 1.0, &[1, 2], cfg.moment_reps, &occ)?, "moments_anchor_occupation");
    let m_sub =
        named(verify_moments(&anchor, 0.0, 1.0, &[1, 2, 3, 4], cfg.moment_reps, &sub)?, "moments_anchor_subordinator");
    let start = Instant::now();
    let mut agree = estimator_agreement(&m_occ, &m_sub, 3.0)?;
    agree.wall_time_s = start.elapsed().as_secs_f64();
    out.extend([m_occ, m_sub, agree]);
    for (k, (m, name)) in [(anchor, "moments_interval_alpha2"), (stable15, "moments_interval_alpha1.5")].iter().enumerate() {
        let o = MomentOptions { seed: seed(7 + k as u64), ..sub.clone() };
        out.push(named(verify_moments(m, 1.0, 2.0, &[1, 2, 3, 4], cfg.moment_reps, &o)?, name));
    }

    let tail = TailOptions {
        seed: seed(10),
        quantile_window: cfg.tail_window,
        exponent_abs_tol: Some(0.2),
        threads: t,
        ..TailOptions::default()
    };
    let z_tail = named(verify_tail(&anchor, 0.0, 1.0, cfg.tail_reps, &tail)?, "tail_anchor");
    let lt_tail = named(
        verify_lt_tail(anchor.stable(), 0.0, 1.0, cfg.tail_reps, &TailOptions { seed: seed(11), ..tail.clone() })?,
        "lt_tail_anchor",
    );

    let mt = MaxTailOptions {
        seed: seed(12),
        n_steps: cfg.max_tail_steps,
        quantile_window: cfg.max_tail_window,
        threads: t,
        ..MaxTailOptions::default()
    };
    let max_tail = named(verify_max_tail(&anchor, 0.0, 1.0, cfg.max_tail_reps, None, &mt)?, "max_tail_anchor");
    let a8 = max_tail.stat("a8_analogue").map(|s| s.estimate);
    out.extend([z_tail, lt_tail, max_tail]);

    for (k, (m, suffix)) in [(anchor, "anchor"), (stable15, "alpha1.5")].iter().enumerate() {
        let po = PathOptions { seed: seed(13 + k as u64), n_steps: cfg.path_steps, threads: t, ..PathOptions::default() };
        let start = Instant::now();
        let sample = pathwise_sample(m, &cfg.path_grids, cfg.paths, &po)?;
        let sim_time = start.elapsed().as_secs_f64();
        let mut md = named(modulus_result(m, &sample, &po)?, &format!("modulus_{suffix}"));
        // the shared simulation is charged to the modulus campaign
        md.wall_time_s += sim_time;
        let a8 = if k == 0 { a8 } else { None };
        out.push(md);
        out.push(named(lil_result(m, &sample, LilMode::Global, a8, &po)?, &format!("lil_global_{suffix}")));
        out.push(named(lil_result(m, &sample, LilMode::Local, a8, &po)?, &format!("lil_local_{suffix}")));
    }

    let mgf = named(
        verify_mgf(
            &anchor,
            &[0.5, 1.0, 1.5, 2.0],
            None,
            cfg.mgf_reps,
            &MgfOptions { seed: seed(20), threads: t, ..MgfOptions::default() },
        )?,
        "mgf_anchor",
    );
    out.push(named(
        verify_ldp_interval(&anchor, 1.0, None, cfg.ldp_reps, &LdpOptions { seed: seed(21), threads: t, ..LdpOptions::default() })?,
        "ldp_anchor",
    ));
    let tail_ref = out.iter().find(|c| c.name == "tail_anchor").expect("tail campaign ran").clone();
    let conj = named(conjugacy_check(&tail_ref, &mgf, 0.15)?, "conjugacy_anchor");
    out.push(mgf);
    out.push(conj);
    Ok(Report::new(cfg.seed, out))
}
