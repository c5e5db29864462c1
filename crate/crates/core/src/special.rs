//! Thin layer over `statrs` special functions.
//!
//! Every Gamma value in the crate goes through [`ln_gamma`]; products and
//! quotients of Gamma functions are formed in log space and exponentiated
//! once at the end.

use std::f64::consts::PI;

/// `ln Γ(x)` for `x > 0`.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// `Γ(x)` for `x > 0`, via the log-Gamma kernel.
#[inline]
pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

/// `ln n!` for real `n ≥ 0`.
#[inline]
pub fn ln_factorial(n: f64) -> f64 {
    ln_gamma(n + 1.0)
}

/// `tan(πα/2)`, forced to exactly zero in a 1e-9 neighbourhood of α = 2.
pub fn tan_half_pi_alpha(alpha: f64) -> f64 {
    if (alpha - 2.0).abs() < 1e-9 {
        0.0
    } else {
        (PI * alpha / 2.0).tan()
    }
}

/// Upper tail of the standard normal, `P{N > x}`.
#[inline]
pub fn normal_sf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / std::f64::consts::SQRT_2)
}

/// `ln P{N > x}`, accurate far into the tail.
pub fn ln_normal_sf(x: f64) -> f64 {
    if x < 30.0 {
        normal_sf(x).ln()
    } else {
        // Mills ratio expansion.
        let x2 = x * x;
        -0.5 * x2 - x.ln() - 0.5 * (2.0 * PI).ln() + (1.0 - 1.0 / x2 + 3.0 / (x2 * x2)).ln()
    }
}

/// Numerically stable `ln(Σ exp(v_i))`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}
