use std::path::Path;

use ltfbm_core::growth::{
    estimate_growth, g_beta_growth, lt_mgf_growth, m1_oracle, m1_type, z_logmgf_growth, CoefficientOracle,
};
use ltfbm_core::model::*;
use ltfbm_core::simulate::{PathMetadata, ZSimulator};
use ltfbm_core::verify::{
    run_all, verify_ldp_interval, verify_lil, verify_lt_tail, verify_max_tail, verify_mgf, verify_modulus,
    verify_moments, verify_tail, AllConfig, CampaignResult, CRITERIA,
};
use ltfbm_core::{io, verify};
use serde_json::{json, Value};

use crate::config::{RateArg, RunConfig, SeriesArg, TailTarget};
use crate::{Cli, CliError, Command, Interval};

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Constants { .. } => "constants",
            Command::Rate { .. } => "rate",
            Command::Simulate { .. } => "simulate",
            Command::Growth { .. } => "growth",
            Command::VerifyMoments { .. } => "verify-moments",
            Command::VerifyMgf { .. } => "verify-mgf",
            Command::VerifyTail { .. } => "verify-tail",
            Command::VerifyMax { .. } => "verify-max",
            Command::VerifyModulus { .. } => "verify-modulus",
            Command::VerifyLil { .. } => "verify-lil",
            Command::VerifyLdp { .. } => "verify-ldp",
            Command::All { .. } => "all",
        }
    }
}

fn set<T: Clone>(slot: &mut T, flag: &Option<T>) {
    if let Some(v) = flag {
        *slot = v.clone();
    }
}

fn set_interval(a: &mut f64, b: &mut f64, iv: &Interval) {
    set(a, &iv.a);
    set(b, &iv.b);
}

/// Defaults, then the config file, then flags.
pub fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.model.alpha, &c.alpha);
    set(&mut cfg.model.nu, &c.nu);
    set(&mut cfg.model.chi, &c.chi);
    set(&mut cfg.model.hurst, &c.hurst);
    if c.out.is_some() {
        cfg.out_dir = c.out.clone();
    }
    let seed = c.seed;
    match &cli.command {
        Command::Constants { interval, beta } => {
            set_interval(&mut cfg.constants.a, &mut cfg.constants.b, interval);
            if beta.is_some() {
                cfg.constants.beta = *beta;
            }
        }
        Command::Rate { kind, x, interval } => {
            set(&mut cfg.rate.kind, kind);
            set(&mut cfg.rate.x, x);
            set_interval(&mut cfg.rate.a, &mut cfg.rate.b, interval);
        }
        Command::Simulate { steps, horizon, method } => {
            let s = &mut cfg.simulate;
            set(&mut s.seed, &seed);
            set(&mut s.n_steps, steps);
            set(&mut s.horizon, horizon);
            set(&mut s.method, &method.map(Into::into));
        }
        Command::Growth { series, p_max, beta, interval } => {
            let g = &mut cfg.growth;
            set(&mut g.series, series);
            set(&mut g.p_max, p_max);
            set(&mut g.beta, beta);
            set_interval(&mut g.a, &mut g.b, interval);
        }
        Command::VerifyMoments { reps, orders, method, steps, interval } => {
            let m = &mut cfg.moments;
            set(&mut m.options.seed, &seed);
            set(&mut m.reps, reps);
            set(&mut m.orders, orders);
            set(&mut m.options.method, &method.map(Into::into));
            set(&mut m.options.n_steps, steps);
            set_interval(&mut m.a, &mut m.b, interval);
        }
        Command::VerifyMgf { reps, theta } => {
            let m = &mut cfg.mgf;
            set(&mut m.options.seed, &seed);
            set(&mut m.reps, reps);
            set(&mut m.theta, theta);
        }
        Command::VerifyTail { reps, target, interval } => {
            let t = &mut cfg.tail;
            set(&mut t.options.seed, &seed);
            set(&mut t.reps, reps);
            set(&mut t.target, target);
            set_interval(&mut t.a, &mut t.b, interval);
        }
        Command::VerifyMax { reps, steps, interval } => {
            let t = &mut cfg.max_tail;
            set(&mut t.options.seed, &seed);
            set(&mut t.reps, reps);
            set(&mut t.options.n_steps, steps);
            set_interval(&mut t.a, &mut t.b, interval);
        }
        Command::VerifyModulus { paths, steps } => {
            let p = &mut cfg.modulus;
            set(&mut p.options.seed, &seed);
            set(&mut p.paths, paths);
            set(&mut p.options.n_steps, steps);
        }
        Command::VerifyLil { paths, steps, mode, a8 } => {
            let p = &mut cfg.lil;
            set(&mut p.options.seed, &seed);
            set(&mut p.paths, paths);
            set(&mut p.options.n_steps, steps);
            set(&mut p.mode, &mode.map(Into::into));
            if a8.is_some() {
                p.a8 = *a8;
            }
        }
        Command::VerifyLdp { reps, x } => {
            let l = &mut cfg.ldp;
            set(&mut l.options.seed, &seed);
            set(&mut l.reps, reps);
            set(&mut l.x, x);
        }
        Command::All { quick } => {
            if *quick {
                cfg.all = AllConfig { seed: cfg.all.seed, ..AllConfig::quick() };
            }
            set(&mut cfg.all.seed, &seed);
        }
    }
    Ok(cfg)
}

fn write(dir: &Path, file: &str, contents: &str) -> Result<(), CliError> {
    std::fs::write(dir.join(file), contents)?;
    Ok(())
}

/// Runs the command; `Ok(false)` means a verdict failed.
pub fn run(cli: &Cli) -> Result<bool, CliError> {
    let cfg = resolve(cli)?;
    let m = cfg.model.params()?;
    let name = cli.command.name();
    let dir = cfg.out_dir();
    let threads = cli.common.threads;
    std::fs::create_dir_all(&dir)?;
    write(&dir, &format!("{name}.config.json"), &io::json_string(&cfg)?)?;

    let campaign = match &cli.command {
        Command::Constants { .. } => {
            let v = constants_json(&m, &cfg)?;
            let text = io::json_string(&v)?;
            write(&dir, "constants.json", &text)?;
            print!("{text}");
            return Ok(true);
        }
        Command::Rate { .. } => return rate(&m, &cfg, &dir),
        Command::Simulate { .. } => return simulate(&m, &cfg, &dir, threads),
        Command::Growth { .. } => return growth(&m, &cfg, &dir),
        Command::All { .. } => return all(&cfg, &dir, threads),
        Command::VerifyMoments { .. } => {
            let b = &cfg.moments;
            let o = ltfbm_core::verify::MomentOptions { threads, ..b.options.clone() };
            verify_moments(&m, b.a, b.b, &b.orders, b.reps, &o)?
        }
        Command::VerifyMgf { .. } => {
            let b = &cfg.mgf;
            let o = ltfbm_core::verify::MgfOptions { threads, ..b.options.clone() };
            verify_mgf(&m, &b.theta, b.t_grid.as_deref(), b.reps, &o)?
        }
        Command::VerifyTail { .. } => {
            let b = &cfg.tail;
            let o = ltfbm_core::verify::TailOptions { threads, ..b.options.clone() };
            match b.target {
                TailTarget::Z => verify_tail(&m, b.a, b.b, b.reps, &o)?,
                TailTarget::LocalTime => verify_lt_tail(m.stable(), b.a, b.b, b.reps, &o)?,
            }
        }
        Command::VerifyMax { .. } => {
            let b = &cfg.max_tail;
            let o = ltfbm_core::verify::MaxTailOptions { threads, ..b.options.clone() };
            verify_max_tail(&m, b.a, b.b, b.reps, b.x_grid.as_deref(), &o)?
        }
        Command::VerifyModulus { .. } => {
            let b = &cfg.modulus;
            let o = ltfbm_core::verify::PathOptions { threads, ..b.options.clone() };
            verify_modulus(&m, &b.h_grid, b.paths, &o)?
        }
        Command::VerifyLil { .. } => {
            let b = &cfg.lil;
            let o = ltfbm_core::verify::PathOptions { threads, ..b.options.clone() };
            verify_lil(&m, &b.resolved_grid(), b.paths, b.mode, b.a8, &o)?
        }
        Command::VerifyLdp { .. } => {
            let b = &cfg.ldp;
            let o = ltfbm_core::verify::LdpOptions { threads, ..b.options.clone() };
            verify_ldp_interval(&m, b.x, b.t_grid.as_deref(), b.reps, &o)?
        }
    };
    write_campaign(&dir, name, &campaign)?;
    print_campaign(&campaign);
    Ok(campaign.pass)
}

fn write_campaign(dir: &Path, name: &str, c: &CampaignResult) -> Result<(), CliError> {
    write(dir, &format!("{name}.json"), &c.to_json()?)?;
    write(dir, &format!("{name}.csv"), &verify::campaigns_csv(std::slice::from_ref(c)))?;
    Ok(())
}

fn print_campaign(c: &CampaignResult) {
    println!("{}: {}", c.name, if c.pass { "PASS" } else { "FAIL" });
    for s in &c.stats {
        let verdict = match s.pass {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "",
        };
        let target = s.target.map(|t| format!(" target {t:.6}")).unwrap_or_default();
        let se = s.se.map(|t| format!(" ± {t:.2e}")).unwrap_or_default();
        println!("  {:<36} {:>14.6}{se}{target}  {verdict}", s.name, s.estimate);
    }
    for n in &c.notes {
        println!("  note: {n}");
    }
}

fn ok_or_null(r: ltfbm_core::Result<f64>) -> Value {
    r.map(Value::from).unwrap_or(Value::Null)
}

fn constants_json(m: &ModelParams, cfg: &RunConfig) -> Result<Value, CliError> {
    let p = m.stable();
    let (a, b) = (cfg.constants.a, cfg.constants.b);
    let thr = m.beta_threshold();
    let beta = cfg.constants.beta.unwrap_or(if 1.0 < thr { 1.0 } else { thr / 2.0 });
    let growth = b3_and_rho(m, beta, a, b);
    let lambda1_star = RateFunctionSpec::lambda1_star(m).map(|s| s.prefactor);
    Ok(json!({
        "params": { "alpha": m.alpha(), "nu": p.nu(), "chi": p.chi(), "hurst": m.hurst() },
        "interval": { "a": a, "b": b },
        "A1": a1(p),
        "C_alpha": c_alpha(p),
        "lt_constant": lt_constant(p),
        "lt_ldp_constant": lt_ldp_constant(p, a, b)?,
        "lt_tail_constant": lt_tail_constant(p, a, b)?,
        "B1": ok_or_null(growth_constant_b1(m)),
        "B2": ok_or_null(tail_constant_b2(m, a, b)),
        "lambda1_star_prefactor": ok_or_null(lambda1_star),
        "beta": beta,
        "B3": growth.as_ref().map(|g| Value::from(g.b3)).unwrap_or(Value::Null),
        "rho": growth.as_ref().map(|g| Value::from(g.rho)).unwrap_or(Value::Null),
        "lt_index": p.lt_index(),
        "selfsim_index": m.selfsim_index(),
        "tail_exponent": m.tail_exponent(),
        "mgf_exponent": m.mgf_exponent(),
        "ldp_time_exponent": m.ldp_time_exponent(),
        "beta_threshold": thr,
        "interval_exponent": m.interval_exponent(),
        "log_power": m.log_power(),
        "ldp_valid": m.ldp_valid(),
    }))
}

/// Maximiser of `θx − Bθ^q`, used to centre the numerical Legendre window.
fn theta_star(b: f64, q: f64, x: f64) -> f64 {
    (x.abs() / (q * b)).powf(1.0 / (q - 1.0))
}

fn rate(m: &ModelParams, cfg: &RunConfig, dir: &Path) -> Result<bool, CliError> {
    let r = &cfg.rate;
    let p = m.stable();
    let (spec, dual) = match r.kind {
        RateArg::Lambda1 => (RateFunctionSpec::lambda1(m)?, None),
        RateArg::Lambda1Star => (RateFunctionSpec::lambda1_star(m)?, Some(RateFunctionSpec::lambda1(m)?)),
        RateArg::Lambda2 => (RateFunctionSpec::lambda2(p, r.a, r.b)?, None),
        RateArg::Lambda2Star => (RateFunctionSpec::lambda2_star(p, r.a, r.b)?, Some(RateFunctionSpec::lambda2(p, r.a, r.b)?)),
    };
    let mut rows = Vec::with_capacity(r.x.len());
    for &x in &r.x {
        let numeric = match &dual {
            Some(l) if x > 0.0 || l.kind == RateKind::Lambda1 => {
                let w = 2.0 * theta_star(l.prefactor, l.exponent, x) + 1.0;
                legendre_numeric(l, x, -w, w, r.legendre_points)?
            }
            _ => f64::NAN,
        };
        rows.push(vec![x, spec.eval(x).to_f64(), numeric]);
    }
    write(dir, "rate.csv", &io::csv_string(&["x", "value", "legendre_numeric"], &rows))?;
    let text = io::json_string(&spec)?;
    write(dir, "rate.json", &text)?;
    print!("{text}");
    Ok(true)
}

fn simulate(m: &ModelParams, cfg: &RunConfig, dir: &Path, threads: usize) -> Result<bool, CliError> {
    let sc = cfg.simulate.sim_config(threads);
    let sim = ZSimulator::new(m, &sc)?;
    let path = sim.path(sc.seed)?;
    let rows: Vec<Vec<f64>> = path
        .z
        .times()
        .zip(path.local_time.values.iter().zip(&path.z.values))
        .map(|(t, (l, z))| vec![t, *l, *z])
        .collect();
    write(dir, "simulate.csv", &io::csv_string(&["t", "local_time", "z"], &rows))?;
    let meta = PathMetadata::for_path(m, &sc, sc.seed, &path);
    write(dir, "simulate.meta.json", &io::json_string(&meta)?)?;
    println!("simulate: {} points on [0, {}] written to {}", rows.len(), sc.horizon(), dir.display());
    Ok(true)
}

fn growth(m: &ModelParams, cfg: &RunConfig, dir: &Path) -> Result<bool, CliError> {
    let g = &cfg.growth;
    let p = m.stable();
    let (est, order, kind) = match g.series {
        SeriesArg::Exp => (estimate_growth(&CoefficientOracle::exp(), g.p_max)?, Some(1.0), Some(1.0)),
        SeriesArg::ExpZ2 => (estimate_growth(&CoefficientOracle::exp_power(2), g.p_max)?, Some(2.0), Some(1.0)),
        SeriesArg::M1 => {
            let rho1 = m.mgf_exponent().map(|e| e / 2.0);
            (estimate_growth(&m1_oracle(m), g.p_max)?, rho1, Some(m1_type(m)?))
        }
        SeriesArg::ZLogmgf => (z_logmgf_growth(m, g.p_max)?, m.mgf_exponent(), Some(growth_constant_b1(m)?)),
        SeriesArg::GBeta => {
            let t = b3_and_rho(m, g.beta, g.a, g.b)?;
            (g_beta_growth(m, g.beta, g.a, g.b, g.p_max)?, Some(t.rho), Some(t.b3))
        }
        SeriesArg::LtMgf => {
            let al = m.alpha();
            (lt_mgf_growth(p, g.a, g.b, g.p_max)?, Some(al / (al - 1.0)), Some(lt_ldp_constant(p, g.a, g.b)?))
        }
    };
    est.write_diag_csv(&dir.join("growth.csv"))?;
    let summary = json!({
        "series": g.series,
        "p_max": g.p_max,
        "order": est.order_rho,
        "type": est.type_b,
        "rho_used": est.rho_used,
        "converged": est.converged,
        "oscillation": est.oscillation,
        "sup_excess": est.sup_excess,
        "type_bracket": est.type_bracket,
        "target_order": order,
        "target_type": kind,
    });
    let text = io::json_string(&summary)?;
    write(dir, "growth.json", &text)?;
    print!("{text}");
    Ok(true)
}

fn all(cfg: &RunConfig, dir: &Path, threads: usize) -> Result<bool, CliError> {
    let report = run_all(&AllConfig { threads, ..cfg.all.clone() })?;
    write(dir, "all.json", &report.to_json()?)?;
    write(dir, "all.csv", &report.to_csv())?;
    for (k, names, _) in CRITERIA.iter().filter(|c| !c.1.is_empty()) {
        let ok = names.iter().all(|n| report.campaign(n).is_some_and(|c| c.pass));
        println!("criterion {k}: {}", if ok { "PASS" } else { "FAIL" });
    }
    for c in &report.campaigns {
        let failed: Vec<&str> = c.failures().iter().map(|s| s.name.as_str()).collect();
        println!("  {:<28} {}{}", c.name, if c.pass { "pass" } else { "FAIL" }, if failed.is_empty() {
            String::new()
        } else {
            format!("  ({})", failed.join(", "))
        });
    }
    Ok(report.all_pass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;
    use ltfbm_core::verify::LilMode;

    #[test]
    fn flags_override_file_values() {
        let dir = std::env::temp_dir().join(format!("ltfbm-resolve-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let file = dir.join("c.json");
        std::fs::write(&file, r#"{"model": {"alpha": 1.5}, "moments": {"reps": 30000, "orders": [1]}}"#).unwrap();
        let cli = Cli::parse_from([
            "ltfbm",
            "verify-moments",
            "--config",
            file.to_str().unwrap(),
            "--reps",
            "20000",
            "--seed",
            "9",
        ]);
        let c = resolve(&cli).unwrap();
        assert_eq!(c.model.alpha, 1.5);
        assert_eq!(c.moments.reps, 20000);
        assert_eq!(c.moments.orders, vec![1]);
        assert_eq!(c.moments.options.seed, 9);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn lil_mode_flag_maps() {
        let cli = Cli::parse_from(["ltfbm", "verify-lil", "--mode", "local"]);
        assert_eq!(resolve(&cli).unwrap().lil.mode, LilMode::Local);
    }
}
