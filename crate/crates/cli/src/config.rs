//! The resolved run configuration: built-in defaults, overlaid by an optional
//! JSON file, overlaid by command-line flags. Every run writes the resolved
//! value back out as `<command>.config.json`; feeding that file to `--config`
//! reproduces the run.

use std::path::{Path, PathBuf};

use ltfbm_core::model::ModelParams;
use ltfbm_core::simulate::{EpsilonRule, LocalTimeMethod, SimConfig};
use ltfbm_core::verify::{AllConfig, LdpOptions, LilMode, MaxTailOptions, MgfOptions, MomentOptions, PathOptions, PathwiseGrids, TailOptions};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelBlock {
    pub alpha: f64,
    pub nu: f64,
    pub chi: f64,
    pub hurst: f64,
}

impl Default for ModelBlock {
    fn default() -> Self {
        Self { alpha: 2.0, nu: 0.0, chi: 2.0, hurst: 0.5 }
    }
}

impl ModelBlock {
    pub fn params(&self) -> Result<ModelParams, CliError> {
        Ok(ModelParams::from_parts(self.alpha, self.nu, self.chi, self.hurst)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantsBlock {
    pub a: f64,
    pub b: f64,
    /// Exponent of `E exp(t|Z(b) − Z(a)|^β)`; `None` means 1 when admissible,
    /// otherwise half the admissibility threshold.
    pub beta: Option<f64>,
}

impl Default for ConstantsBlock {
    fn default() -> Self {
        Self { a: 0.0, b: 1.0, beta: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum RateArg {
    Lambda1,
    Lambda1Star,
    Lambda2,
    Lambda2Star,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RateBlock {
    pub kind: RateArg,
    pub x: Vec<f64>,
    /// Interval of the local-time increment for Λ₂, Λ₂*.
    pub a: f64,
    pub b: f64,
    /// Grid size of the numerical Legendre transform reported next to the closed form.
    pub legendre_points: usize,
}

impl Default for RateBlock {
    fn default() -> Self {
        Self {
            kind: RateArg::Lambda1Star,
            x: vec![0.1, 0.3, 1.0, 3.0, 10.0],
            a: 0.0,
            b: 1.0,
            legendre_points: 4001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateBlock {
    pub seed: u64,
    pub n_steps: usize,
    pub horizon: f64,
    pub method: LocalTimeMethod,
    pub epsilon_rule: EpsilonRule,
    pub fbm_oversample: usize,
}

impl Default for SimulateBlock {
    fn default() -> Self {
        Self {
            seed: 1,
            n_steps: 1 << 12,
            horizon: 1.0,
            method: LocalTimeMethod::InverseSubordinator,
            epsilon_rule: EpsilonRule::default(),
            fbm_oversample: 4,
        }
    }
}

impl SimulateBlock {
    pub fn sim_config(&self, threads: usize) -> SimConfig {
        SimConfig {
            epsilon_rule: self.epsilon_rule,
            fbm_oversample: self.fbm_oversample,
            ..SimConfig::on_horizon(self.horizon, self.n_steps, self.seed, self.method)
        }
        .with_threads(threads)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SeriesArg {
    /// e^z
    Exp,
    /// e^(z²)
    ExpZ2,
    /// M₁(r) = E exp(r L₁^(2H))
    M1,
    /// log E exp(θ Z(1)) in θ
    ZLogmgf,
    /// E exp(t |Z(b) − Z(a)|^β)
    GBeta,
    /// E exp(t (L_b − L_a))
    LtMgf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrowthBlock {
    pub series: SeriesArg,
    pub p_max: usize,
    pub beta: f64,
    pub a: f64,
    pub b: f64,
}

impl Default for GrowthBlock {
    fn default() -> Self {
        Self { series: SeriesArg::M1, p_max: ltfbm_core::growth::DEFAULT_P_MAX, beta: 1.0, a: 0.0, b: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentsBlock {
    pub a: f64,
    pub b: f64,
    pub orders: Vec<u32>,
    pub reps: usize,
    pub options: MomentOptions,
}

impl Default for MomentsBlock {
    fn default() -> Self {
        Self { a: 0.0, b: 1.0, orders: vec![1, 2], reps: 100_000, options: MomentOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MgfBlock {
    pub theta: Vec<f64>,
    /// Explicit time grid; `None` places times by the action band of each θ.
    pub t_grid: Option<Vec<f64>>,
    pub reps: usize,
    pub options: MgfOptions,
}

impl Default for MgfBlock {
    fn default() -> Self {
        Self { theta: vec![0.5, 1.0, 1.5, 2.0], t_grid: None, reps: 1_000_000, options: MgfOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TailTarget {
    /// `|Z(b) − Z(a)|`
    Z,
    /// `L_b − L_a`
    LocalTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TailBlock {
    pub target: TailTarget,
    pub a: f64,
    pub b: f64,
    pub reps: usize,
    pub options: TailOptions,
}

impl Default for TailBlock {
    fn default() -> Self {
        Self { target: TailTarget::Z, a: 0.0, b: 1.0, reps: 1_000_000, options: TailOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaxTailBlock {
    pub a: f64,
    pub b: f64,
    pub reps: usize,
    pub x_grid: Option<Vec<f64>>,
    pub options: MaxTailOptions,
}

impl Default for MaxTailBlock {
    fn default() -> Self {
        Self { a: 0.0, b: 1.0, reps: 100_000, x_grid: None, options: MaxTailOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModulusBlock {
    pub h_grid: Vec<f64>,
    pub paths: usize,
    pub options: PathOptions,
}

impl Default for ModulusBlock {
    fn default() -> Self {
        Self { h_grid: PathwiseGrids::default().h_grid, paths: 2000, options: PathOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LilBlock {
    pub mode: LilMode,
    /// Times (global mode) or window widths (local mode); `None` uses the default grid of the mode.
    pub grid: Option<Vec<f64>>,
    pub paths: usize,
    /// Empirical maximal-inequality constant; enables the bound diagnostic.
    pub a8: Option<f64>,
    pub options: PathOptions,
}

impl Default for LilBlock {
    fn default() -> Self {
        Self { mode: LilMode::Global, grid: None, paths: 2000, a8: None, options: PathOptions::default() }
    }
}

impl LilBlock {
    pub fn resolved_grid(&self) -> Vec<f64> {
        self.grid.clone().unwrap_or_else(|| {
            let g = PathwiseGrids::default();
            match self.mode {
                LilMode::Global => g.t_grid,
                LilMode::Local => g.local_h_grid,
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LdpBlock {
    pub x: f64,
    pub t_grid: Option<Vec<f64>>,
    pub reps: usize,
    pub options: LdpOptions,
}

impl Default for LdpBlock {
    fn default() -> Self {
        Self { x: 1.0, t_grid: None, reps: 1_000_000, options: LdpOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelBlock,
    /// Output directory; the `LTFBM_OUT` environment variable and `--out` override it.
    pub out_dir: Option<PathBuf>,
    pub constants: ConstantsBlock,
    pub rate: RateBlock,
    pub simulate: SimulateBlock,
    pub growth: GrowthBlock,
    pub moments: MomentsBlock,
    pub mgf: MgfBlock,
    pub tail: TailBlock,
    pub max_tail: MaxTailBlock,
    pub modulus: ModulusBlock,
    pub lil: LilBlock,
    pub ldp: LdpBlock,
    pub all: AllConfig,
}

pub const DEFAULT_OUT_DIR: &str = "ltfbm-out";

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected_at_every_level() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"modle": {}}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"model": {"alpah": 2}}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"moments": {"options": {"sed": 1}}}"#).is_err());
    }

    #[test]
    fn partial_files_fill_in_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"model": {"alpha": 1.5}, "moments": {"reps": 20000}}"#).unwrap();
        assert_eq!(c.model.alpha, 1.5);
        assert_eq!(c.model.hurst, 0.5);
        assert_eq!(c.moments.reps, 20000);
        assert_eq!(c.moments.orders, vec![1, 2]);
    }

    #[test]
    fn round_trip_is_exact() {
        let c = RunConfig::default();
        let text = serde_json::to_string_pretty(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), c);
    }
}
