use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Exp1, StandardNormal};

use crate::model::StableParams;
use crate::rng::Rng;
use crate::special::tan_half_pi_alpha;

/// Parameters of the textbook `S_α(σ, β, 0)` law, whose characteristic
/// function is `exp(−σ^α |ξ|^α (1 − iβ sgn ξ tan(πα/2)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerParams {
    pub alpha: f64,
    pub skew: f64,
    pub scale: f64,
}

/// Maps the model convention `|ξ|^α (1 + iν sgn ξ tan(πα/2)) / χ` over a time
/// step `dt` onto the sampler convention: `σ^α = dt/χ`, `β = −ν`.
///
/// This is the only place where the two conventions meet.
pub fn sampler_params(p: &StableParams, dt: f64) -> SamplerParams {
    SamplerParams { alpha: p.alpha(), skew: -p.nu(), scale: (dt / p.chi()).powf(1.0 / p.alpha()) }
}

/// One draw of `S_α(σ, β, 0)` by Chambers–Mallows–Stuck (α ≠ 1).
///
/// α = 2 short-circuits to a Gaussian with variance `2σ²`, which is the
/// same law and several times cheaper.
pub fn cms_draw(s: &SamplerParams, rng: &mut Rng) -> f64 {
    let a = s.alpha;
    if a == 2.0 {
        let z: f64 = rng.sample(StandardNormal);
        return s.scale * std::f64::consts::SQRT_2 * z;
    }
    let t = s.skew * tan_half_pi_alpha(a);
    let b = t.atan() / a;
    let c = (1.0 + t * t).powf(1.0 / (2.0 * a));
    let v = PI * (rng.gen::<f64>() - 0.5);
    let w: f64 = rng.sample(Exp1);
    let x = c * (a * (v + b)).sin() / v.cos().powf(1.0 / a) * ((v - a * (v + b)).cos() / w).powf((1.0 - a) / a);
    s.scale * x
}

/// Fills `out` with i.i.d. increments of X over steps of length `dt`.
pub fn fill_increments(p: &StableParams, dt: f64, rng: &mut Rng, out: &mut [f64]) {
    let s = sampler_params(p, dt);
    for v in out.iter_mut() {
        *v = cms_draw(&s, rng);
    }
}

/// Kanter's function `A(u) = [sin(au)^a sin((1−a)u)^(1−a) / sin u]^(1/(1−a))`.
pub fn kanter_a(a: f64, u: f64) -> f64 {
    ((a * u).sin().powf(a) * ((1.0 - a) * u).sin().powf(1.0 - a) / u.sin()).powf(1.0 / (1.0 - a))
}

/// One draw of `U` for Kanter's representation, uniform on (0, π) and kept
/// away from the endpoints where `A` degenerates.
pub fn kanter_u(rng: &mut Rng) -> f64 {
    loop {
        let u = PI * rng.gen::<f64>();
        if u > 0.0 && u < PI {
            return u;
        }
    }
}

/// Positive stable variable with Laplace transform `exp(−λ^a)`, 0 < a < 1:
/// `(A(U)/E)^((1−a)/a)` with E standard exponential.
pub fn positive_stable(a: f64, rng: &mut Rng) -> f64 {
    let u = kanter_u(rng);
    let e: f64 = rng.sample(Exp1);
    (kanter_a(a, u) / e).powf((1.0 - a) / a)
}
