//! Browser bindings for the static demo in `www/`.
//!
//! Each export takes plain numbers and returns a JSON string; errors come
//! back as JavaScript exceptions carrying the message. The pure functions
//! behind the exports are public so they can be tested natively.

use ltfbm_core::model::*;
use ltfbm_core::simulate::{LocalTimeMethod, SimConfig, ZSimulator};
use serde_json::json;
use wasm_bindgen::prelude::*;

type Out = Result<String, String>;

fn model(alpha: f64, nu: f64, chi: f64, hurst: f64) -> Result<ModelParams, String> {
    ModelParams::from_parts(alpha, nu, chi, hurst).map_err(|e| e.to_string())
}

fn finite_or_null(r: ltfbm_core::Result<f64>) -> serde_json::Value {
    r.map(serde_json::Value::from).unwrap_or(serde_json::Value::Null)
}

/// Closed-form constants and exponents on the unit interval.
pub fn constants_json(alpha: f64, nu: f64, chi: f64, hurst: f64) -> Out {
    let m = model(alpha, nu, chi, hurst)?;
    let p = m.stable();
    let v = json!({
        "A1": a1(p),
        "lt_constant": lt_constant(p),
        "B1": finite_or_null(growth_constant_b1(&m)),
        "B2": finite_or_null(tail_constant_b2(&m, 0.0, 1.0)),
        "selfsim_index": m.selfsim_index(),
        "tail_exponent": m.tail_exponent(),
        "mgf_exponent": m.mgf_exponent(),
        "ldp_time_exponent": m.ldp_time_exponent(),
        "ldp_valid": m.ldp_valid(),
    });
    Ok(v.to_string())
}

/// Λ₁* and Λ₂* on `n` points of `(0, x_max]`; Λ₁* is null when 2H ≥ α.
pub fn rate_curves_json(alpha: f64, nu: f64, chi: f64, hurst: f64, x_max: f64, n: usize) -> Out {
    if !(x_max > 0.0) || n < 2 || n > 100_000 {
        return Err(format!("need x_max > 0 and 2 <= n <= 100000, got {x_max}, {n}"));
    }
    let m = model(alpha, nu, chi, hurst)?;
    let xs: Vec<f64> = (1..=n).map(|i| x_max * i as f64 / n as f64).collect();
    let l1 = RateFunctionSpec::lambda1_star(&m).ok();
    let l2 = RateFunctionSpec::lambda2_star(m.stable(), 0.0, 1.0).map_err(|e| e.to_string())?;
    let curve = |s: &RateFunctionSpec| xs.iter().map(|&x| s.eval(x).to_f64()).collect::<Vec<_>>();
    let v = json!({
        "x": xs,
        "lambda1_star": l1.as_ref().map(curve),
        "lambda2_star": curve(&l2),
    });
    Ok(v.to_string())
}

/// One path of `(L, Z)` on `[0, 1]` with `n_steps` steps. Symmetric models
/// use the inverse-subordinator local time, skewed ones the occupation estimate.
pub fn sample_path_json(alpha: f64, nu: f64, chi: f64, hurst: f64, n_steps: usize, seed: u64) -> Out {
    if !(16..=1 << 16).contains(&n_steps) {
        return Err(format!("n_steps = {n_steps} must lie in [16, 65536]"));
    }
    let m = model(alpha, nu, chi, hurst)?;
    let method = if nu == 0.0 { LocalTimeMethod::InverseSubordinator } else { LocalTimeMethod::Occupation };
    let cfg = SimConfig::on_horizon(1.0, n_steps, seed, method).with_threads(1);
    let path = ZSimulator::new(&m, &cfg).and_then(|s| s.path(seed)).map_err(|e| e.to_string())?;
    let v = json!({
        "t": path.z.times().collect::<Vec<_>>(),
        "local_time": path.local_time.values,
        "z": path.z.values,
        "method": method,
    });
    Ok(v.to_string())
}

#[wasm_bindgen]
pub fn constants(alpha: f64, nu: f64, chi: f64, hurst: f64) -> Result<String, JsError> {
    constants_json(alpha, nu, chi, hurst).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn rate_curves(alpha: f64, nu: f64, chi: f64, hurst: f64, x_max: f64, n: usize) -> Result<String, JsError> {
    rate_curves_json(alpha, nu, chi, hurst, x_max, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn sample_path(alpha: f64, nu: f64, chi: f64, hurst: f64, n_steps: usize, seed: u64) -> Result<String, JsError> {
    sample_path_json(alpha, nu, chi, hurst, n_steps, seed).map_err(|e| JsError::new(&e))
}
