//! Sample paths of the stable process X, fractional Brownian motion W^H,
//! the local time L of X at zero, and `Z(t) = W^H(L_t)`.
//!
//! Every generator is a pure function of its parameters and seed.
//! Replicate `i` of a batch seeded with `s` draws from
//! [`rng::stream`](crate::rng::stream)`(s, i)`. Inside a replicate, the
//! stable/subordinator noise and the fBm noise come from separate
//! sub-streams.

mod fbm;
mod local_time;
mod stable;

use std::path::Path;

pub use fbm::{fgn_autocov, FbmGenerator};
pub use local_time::{
    default_u_step, inverse_subordinator_at, local_time_inverse_subordinator, local_time_occupation,
    lt_conditional_log_sf, lt_marginal, subordinator_index, LtDraw,
};
pub use stable::{cms_draw, fill_increments, kanter_a, positive_stable, sampler_params, SamplerParams};

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::model::{a1, ModelParams, StableParams};
use crate::rng::{self, Rng};
use crate::{io, parallel, Error, Result};

/// A trajectory sampled at `t0 + k dt`, k = 0, …, len − 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPath {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
    /// Nondecreasing and nonnegative (local-time paths).
    pub monotone: bool,
}

impl GridPath {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>, monotone: bool) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Argument(format!("step dt = {dt} must be positive")));
        }
        if values.len() < 2 {
            return Err(Error::Argument(format!("a path needs at least 2 points, got {}", values.len())));
        }
        if monotone && (values[0] < 0.0 || values.windows(2).any(|w| w[1] < w[0])) {
            return Err(Error::Argument("monotone path must be nonnegative and nondecreasing".into()));
        }
        Ok(Self { t0, dt, values, monotone })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.dt * (self.values.len() - 1) as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| self.t0 + self.dt * k as f64)
    }

    /// Linear interpolation at time t; `None` outside the span.
    pub fn at(&self, t: f64) -> Option<f64> {
        let s = (t - self.t0) / self.dt;
        let last = self.values.len() - 1;
        if !(s >= 0.0) || s > last as f64 * (1.0 + 1e-12) {
            return None;
        }
        let k = (s.floor() as usize).min(last - 1);
        let f = (s - k as f64).min(1.0);
        Some(self.values[k] + f * (self.values[k + 1] - self.values[k]))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<Vec<f64>> = self.times().zip(&self.values).map(|(t, v)| vec![t, *v]).collect();
        io::write_csv(path, &["t", "value"], &rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalTimeMethod {
    Occupation,
    InverseSubordinator,
}

/// Occupation bandwidth `ε = spread · dt^(1/α)`, the spatial scale of one
/// increment of X.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonRule {
    pub spread: f64,
}

impl Default for EpsilonRule {
    fn default() -> Self {
        Self { spread: 1.0 }
    }
}

impl EpsilonRule {
    pub fn epsilon(&self, p: &StableParams, dt: f64) -> f64 {
        self.spread * dt.powf(1.0 / p.alpha())
    }
}

fn default_oversample() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n_steps: usize,
    pub dt: f64,
    pub seed: u64,
    pub local_time_method: LocalTimeMethod,
    #[serde(default)]
    pub epsilon_rule: EpsilonRule,
    /// Number of fBm grid intervals per local-time step; the fBm grid spans
    /// `[0, max L]` with `n_steps · fbm_oversample` intervals.
    #[serde(default = "default_oversample")]
    pub fbm_oversample: usize,
    /// Worker threads (0 = all cores). Never affects results.
    #[serde(skip)]
    pub threads: usize,
}

impl SimConfig {
    pub fn new(n_steps: usize, dt: f64, seed: u64, method: LocalTimeMethod) -> Self {
        Self {
            n_steps,
            dt,
            seed,
            local_time_method: method,
            epsilon_rule: EpsilonRule::default(),
            fbm_oversample: default_oversample(),
            threads: 0,
        }
    }

    /// `n_steps` steps covering `[0, horizon]`.
    pub fn on_horizon(horizon: f64, n_steps: usize, seed: u64, method: LocalTimeMethod) -> Self {
        Self::new(n_steps, horizon / n_steps as f64, seed, method)
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub fn horizon(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    pub fn validate(&self, p: &StableParams) -> Result<()> {
        if self.n_steps < 2 {
            return Err(Error::Argument(format!("n_steps = {} must be at least 2", self.n_steps)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Argument(format!("dt = {} must be positive", self.dt)));
        }
        if self.fbm_oversample < 1 {
            return Err(Error::Argument("fbm_oversample must be at least 1".into()));
        }
        if !(self.epsilon_rule.spread > 0.0) {
            return Err(Error::Argument("epsilon spread must be positive".into()));
        }
        if self.local_time_method == LocalTimeMethod::InverseSubordinator {
            local_time::require_symmetric(p)?;
        }
        Ok(())
    }
}

/// I.i.d. increments of X over steps `dt`, deterministic in `seed`.
pub fn stable_increments(p: &StableParams, dt: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    fill_increments(p, dt, &mut rng::stream(seed, 0), &mut out);
    out
}

fn stable_path_rng(p: &StableParams, n: usize, dt: f64, r: &mut Rng) -> Result<GridPath> {
    let s = sampler_params(p, dt);
    let mut values = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    values.push(0.0);
    for _ in 0..n {
        acc += cms_draw(&s, r);
        values.push(acc);
    }
    GridPath::new(0.0, dt, values, false)
}

/// X on `{0, dt, …, n_steps dt}` with X(0) = 0.
pub fn stable_path(p: &StableParams, config: &SimConfig) -> Result<GridPath> {
    config.validate(p)?;
    stable_path_rng(p, config.n_steps, config.dt, &mut rng::stream(config.seed, 0))
}

/// W^H on `{0, dt, …, (n−1) dt}` by circulant embedding.
pub fn fbm_grid(hurst: f64, n: usize, dt: f64, seed: u64) -> Result<GridPath> {
    if n < 2 {
        return Err(Error::Argument(format!("fBm grid needs at least 2 points, got {n}")));
    }
    let g = FbmGenerator::new(hurst, n - 1)?;
    GridPath::new(0.0, dt, g.path(dt, &mut rng::stream(seed, 0)), false)
}

/// `Z = W(L)`: W interpolated linearly at each local-time value.
pub fn compose(w: &GridPath, l: &GridPath) -> Result<GridPath> {
    let span = w.t_end();
    let values = l
        .values
        .iter()
        .map(|&lt| w.at(lt).ok_or(Error::Range { local_time: lt, span }))
        .collect::<Result<Vec<f64>>>()?;
    GridPath::new(l.t0, l.dt, values, false)
}

/// The three paths of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposedPath {
    pub local_time: GridPath,
    pub fbm: GridPath,
    pub z: GridPath,
}

/// Batch simulator of `Z = W^H(L)` on a fixed grid; holds the fBm embedding
/// so it is built once per batch.
#[derive(Debug)]
pub struct ZSimulator {
    model: ModelParams,
    config: SimConfig,
    fbm: FbmGenerator,
}

impl ZSimulator {
    pub fn new(model: &ModelParams, config: &SimConfig) -> Result<Self> {
        config.validate(model.stable())?;
        let fbm = FbmGenerator::new(model.hurst(), config.n_steps * config.fbm_oversample)?;
        Ok(Self { model: *model, config: config.clone(), fbm })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn model(&self) -> &ModelParams {
        &self.model
    }

    /// Local-time path of the replicate seeded with `seed`.
    pub fn local_time(&self, seed: u64) -> Result<GridPath> {
        let p = self.model.stable();
        let c = &self.config;
        let mut r = rng::substream(seed, 0);
        match c.local_time_method {
            LocalTimeMethod::Occupation => {
                let x = stable_path_rng(p, c.n_steps, c.dt, &mut r)?;
                local_time_occupation(&x, c.epsilon_rule.epsilon(p, c.dt))
            }
            LocalTimeMethod::InverseSubordinator => local_time_inverse_subordinator(p, c.n_steps, c.dt, &mut r),
        }
    }

    /// Full replicate: local time, fBm on `[0, max L]`, and their composition.
    pub fn path(&self, seed: u64) -> Result<ComposedPath> {
        let l = self.local_time(seed)?;
        let top = *l.values.last().expect("nonempty path");
        let n_w = self.fbm.increments();
        // When L never leaves 0 the fBm grid is irrelevant; any positive step works.
        let dt_w = if top > 0.0 { top / n_w as f64 } else { 1.0 };
        let mut r = rng::substream(seed, 1);
        let w = GridPath::new(0.0, dt_w, self.fbm.path(dt_w, &mut r), false)?;
        let z = compose(&w, &l)?;
        Ok(ComposedPath { local_time: l, fbm: w, z })
    }

    /// Z at `times` (within `[0, horizon]`) for the replicate seeded with `seed`.
    pub fn at(&self, seed: u64, times: &[f64]) -> Result<Vec<f64>> {
        let z = self.path(seed)?.z;
        times
            .iter()
            .map(|&t| z.at(t).ok_or_else(|| Error::Argument(format!("time {t} outside [0, {}]", z.t_end()))))
            .collect()
    }
}

/// `reps × times.len()` matrix of Z values; replicate i uses seed
/// `mix(config.seed, i)`.
pub fn sample_z(m: &ModelParams, times: &[f64], reps: usize, config: &SimConfig) -> Result<Vec<Vec<f64>>> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Argument("times must be sorted".into()));
    }
    let sim = ZSimulator::new(m, config)?;
    parallel::map_indexed(reps, config.threads, |i| {
        sim.at(rng::mix(config.seed, i as u64), times)
            .map_err(|e| Error::Replicate { index: i, source: Box::new(e) })
    })
}

/// Exact draw of `(L_b, Z(b))` from zero: `Z(b) = L_b^H N` with N standard
/// normal independent of L.
pub fn z_marginal(m: &ModelParams, b: f64, r: &mut Rng) -> (LtDraw, f64) {
    let l = lt_marginal(m.stable(), b, r);
    let n: f64 = r.sample(StandardNormal);
    (l, l.value.powf(m.hurst()) * n)
}

/// Sidecar written next to a dumped path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathMetadata {
    pub model: ModelParams,
    pub config: SimConfig,
    pub replicate_seed: u64,
    pub method: LocalTimeMethod,
    pub epsilon: Option<f64>,
    pub dt: f64,
    pub fbm_dt: f64,
    /// Factor A₁ multiplying the inverse subordinator.
    pub calibration_constant: Option<f64>,
    /// Linear interpolation of W^H costs O(fbm_dt^H) in Z.
    pub interpolation_bias_scale: f64,
}

impl PathMetadata {
    pub fn for_path(m: &ModelParams, config: &SimConfig, seed: u64, path: &ComposedPath) -> Self {
        let p = m.stable();
        let (epsilon, calibration_constant) = match config.local_time_method {
            LocalTimeMethod::Occupation => (Some(config.epsilon_rule.epsilon(p, config.dt)), None),
            LocalTimeMethod::InverseSubordinator => (None, Some(a1(p))),
        };
        Self {
            model: *m,
            config: config.clone(),
            replicate_seed: seed,
            method: config.local_time_method,
            epsilon,
            dt: config.dt,
            fbm_dt: path.fbm.dt,
            calibration_constant,
            interpolation_bias_scale: path.fbm.dt.powf(m.hurst()),
        }
    }
}
