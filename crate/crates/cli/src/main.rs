//! `ltfbm`: closed-form constants, rate functions, simulation, growth
//! estimates and Monte Carlo verification campaigns from the command line.
//!
//! Exit status: 0 when everything ran and every verdict passed, 2 when a
//! campaign verdict failed (reports are still written), 1 on usage,
//! configuration or domain errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::{RateArg, SeriesArg, TailTarget};
use ltfbm_core::simulate::LocalTimeMethod;
use ltfbm_core::verify::LilMode;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] ltfbm_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Parser)]
#[command(name = "ltfbm", version, about = "Large deviations and Monte Carlo verification for local time fractional Brownian motion")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags accepted by every subcommand. They override values from `--config`.
#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration; unknown keys are rejected.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (flat: `<command>.json`, `<command>.csv`, `<command>.config.json`).
    #[arg(long, global = true, env = "LTFBM_OUT")]
    pub out: Option<PathBuf>,
    /// Worker threads, 0 = all cores. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Master seed of the command's campaign.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Stability index α ∈ (1, 2].
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Skewness ν ∈ [−1, 1].
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub nu: Option<f64>,
    /// Scale parameter χ > 0.
    #[arg(long, global = true)]
    pub chi: Option<f64>,
    /// Hurst index H ∈ (0, 1).
    #[arg(long, global = true)]
    pub hurst: Option<f64>,
}

/// Interval `[a, b]` of an increment.
#[derive(Debug, Args, Clone, Copy)]
pub struct Interval {
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print every model constant and exponent as JSON.
    Constants {
        #[command(flatten)]
        interval: Interval,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Evaluate a rate function (closed form and numerical Legendre transform).
    Rate {
        #[arg(long, value_enum)]
        kind: Option<RateArg>,
        /// Points, comma separated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x: Option<Vec<f64>>,
        #[command(flatten)]
        interval: Interval,
    },
    /// Simulate one path of L and Z and dump it as CSV.
    Simulate {
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
    },
    /// Order and type of a power series from its Taylor coefficients.
    Growth {
        #[arg(long, value_enum)]
        series: Option<SeriesArg>,
        #[arg(long)]
        p_max: Option<usize>,
        #[arg(long)]
        beta: Option<f64>,
        #[command(flatten)]
        interval: Interval,
    },
    /// Moments of L and |Z| against their closed forms or bounds.
    VerifyMoments {
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        orders: Option<Vec<u32>>,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[arg(long)]
        steps: Option<usize>,
        #[command(flatten)]
        interval: Interval,
    },
    /// Growth of log E exp(θ Z(t)) in t.
    VerifyMgf {
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        theta: Option<Vec<f64>>,
    },
    /// Tail exponent and constant of |Z(b) − Z(a)| or L_b − L_a.
    VerifyTail {
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long, value_enum)]
        target: Option<TailTarget>,
        #[command(flatten)]
        interval: Interval,
    },
    /// Tail of the running maximum of the increments.
    VerifyMax {
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        #[command(flatten)]
        interval: Interval,
    },
    /// Modulus of continuity scaling.
    VerifyModulus {
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Law of the iterated logarithm statistic.
    VerifyLil {
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        a8: Option<f64>,
    },
    /// Large deviation probability of an interval.
    VerifyLdp {
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        x: Option<f64>,
    },
    /// The full acceptance suite.
    All {
        /// Small sample sizes; runs in about a minute, verdicts not meaningful.
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum MethodArg {
    Occupation,
    InverseSubordinator,
}

impl From<MethodArg> for LocalTimeMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Occupation => LocalTimeMethod::Occupation,
            MethodArg::InverseSubordinator => LocalTimeMethod::InverseSubordinator,
        }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum ModeArg {
    Global,
    Local,
}

impl From<ModeArg> for LilMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Global => LilMode::Global,
            ModeArg::Local => LilMode::Local,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("ltfbm: {e}");
            ExitCode::from(1)
        }
    }
}
