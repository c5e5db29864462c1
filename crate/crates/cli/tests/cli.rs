use std::path::Path;
use std::process::{Command, Output};

fn ltfbm(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ltfbm"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("LTFBM_OUT")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn constants_at_the_gaussian_anchor() {
    let dir = tempfile::tempdir().unwrap();
    let o = ltfbm(dir.path(), &["constants", "--alpha", "2", "--nu", "0", "--chi", "2", "--hurst", "0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["A1"].as_f64().unwrap() - 0.7071067811865476).abs() <= 2.0 * f64::EPSILON);
    assert!((v["B1"].as_f64().unwrap() - 0.125).abs() < 1e-15);
    assert!((v["B3"].as_f64().unwrap() - 0.125).abs() < 1e-14);
    assert!((v["rho"].as_f64().unwrap() - 4.0).abs() < 1e-14);
    assert_eq!(json(&dir.path().join("constants.json")), v);
    assert!(dir.path().join("constants.config.json").exists());
}

#[test]
fn constants_without_ldp_report_null() {
    let dir = tempfile::tempdir().unwrap();
    let o = ltfbm(dir.path(), &["constants", "--alpha", "1.2", "--chi", "1", "--hurst", "0.7"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["B1"].is_null() && v["mgf_exponent"].is_null());
    assert!(v["A1"].as_f64().unwrap() > 0.0);
}

#[test]
fn rate_outside_the_ldp_domain_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = ltfbm(dir.path(), &["rate", "--x", "1", "--alpha", "1.2", "--chi", "1", "--hurst", "0.7"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("domain"));
}

#[test]
fn rate_closed_form_agrees_with_numerical_legendre() {
    let dir = tempfile::tempdir().unwrap();
    let o = ltfbm(dir.path(), &["rate", "--x=-2,0.5,1,4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("rate.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,value,legendre_numeric"));
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!((f[1] / f[2] - 1.0).abs() < 1e-6, "{line}");
    }
}

#[test]
fn moments_are_byte_reproducible_across_runs_and_workers() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let a = ltfbm(d1.path(), &["verify-moments", "--reps", "20000", "--seed", "7", "--threads", "1"]);
    let b = ltfbm(d2.path(), &["verify-moments", "--reps", "20000", "--seed", "7", "--threads", "3"]);
    assert!(matches!(a.status.code(), Some(0 | 2)), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.status.code(), b.status.code());
    let csv = |d: &Path| std::fs::read(d.join("verify-moments.csv")).unwrap();
    assert_eq!(csv(d1.path()), csv(d2.path()));
    assert!(std::fs::read_to_string(d1.path().join("verify-moments.csv")).unwrap().starts_with("campaign,statistic,"));
}

#[test]
fn resolved_config_reproduces_the_run() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let a = ltfbm(d1.path(), &["verify-moments", "--reps", "10000", "--seed", "3", "--orders", "1,2,3", "--alpha", "1.5", "--chi", "1"]);
    assert!(matches!(a.status.code(), Some(0 | 2)));
    let cfg = d1.path().join("verify-moments.config.json");
    assert_eq!(json(&cfg)["moments"]["orders"], serde_json::json!([1, 2, 3]));
    let b = ltfbm(d2.path(), &["verify-moments", "--config", cfg.to_str().unwrap()]);
    assert_eq!(a.status.code(), b.status.code());
    for f in ["verify-moments.csv", "verify-moments.json"] {
        assert_eq!(std::fs::read(d1.path().join(f)).unwrap(), std::fs::read(d2.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"model": {"alpha": 2.0, "gamma": 1.0}}"#).unwrap();
    let o = ltfbm(dir.path(), &["constants", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma"));
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ltfbm(dir.path(), &["no-such-command"]).status.code(), Some(1));
    assert_eq!(ltfbm(dir.path(), &["constants", "--alpha", "abc"]).status.code(), Some(1));
    assert_eq!(ltfbm(dir.path(), &["constants", "--alpha", "2.5"]).status.code(), Some(1));
    assert_eq!(ltfbm(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_ltfbm"))
        .args(["constants"])
        .env("LTFBM_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(out.join("constants.json").exists());
}

#[test]
fn simulate_writes_a_monotone_local_time() {
    let dir = tempfile::tempdir().unwrap();
    let o = ltfbm(dir.path(), &["simulate", "--steps", "512", "--seed", "5", "--alpha", "1.5", "--chi", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("simulate.csv")).unwrap();
    let rows: Vec<Vec<f64>> =
        csv.lines().skip(1).map(|l| l.split(',').map(|s| s.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 513);
    assert!(rows.windows(2).all(|w| w[1][1] >= w[0][1]));
    assert_eq!(rows[0][2], 0.0);
    let meta = json(&dir.path().join("simulate.meta.json"));
    assert_eq!(meta["replicate_seed"], 5);
}

#[test]
fn growth_recovers_the_exponential() {
    let dir = tempfile::tempdir().unwrap();
    let o = ltfbm(dir.path(), &["growth", "--series", "exp", "--p-max", "400"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("growth.json"));
    assert!((v["order"].as_f64().unwrap() - 1.0).abs() < 0.02);
    assert!((v["type"].as_f64().unwrap() - 1.0).abs() < 0.04);
    assert!(dir.path().join("growth.csv").exists());
}

#[test]
fn verdict_failures_exit_two_and_still_write_reports() {
    // 2·10⁴ replicates at 16 steps: the occupation estimator is far too coarse
    // and the anchor mean falls outside its 3 SE band
    let dir = tempfile::tempdir().unwrap();
    let o = ltfbm(dir.path(), &["verify-moments", "--reps", "20000", "--method", "occupation", "--steps", "16"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(dir.path().join("verify-moments.json").exists());
    assert_eq!(json(&dir.path().join("verify-moments.json"))["pass"], false);
}
