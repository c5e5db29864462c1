use serde::{Deserialize, Serialize};

use super::{growth_constant_b1, lt_ldp_constant, ModelParams, StableParams};
use crate::{Error, Result};

/// A value of the extended half-line: finite or +∞.
///
/// +∞ is carried as its own variant so it never enters arithmetic by accident.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtReal {
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInf => None,
        }
    }

    /// Lossy conversion for plotting and JSON consumers that want a float.
    pub fn to_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateKind {
    Lambda1,
    Lambda1Star,
    Lambda2,
    Lambda2Star,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    /// Even function: `c |x|^p` on the whole line.
    Even,
    /// `c x^p` for x > 0, 0 elsewhere.
    ZeroOnNonPositive,
    /// `c x^p` for x > 0, +∞ elsewhere.
    InfiniteOnNonPositive,
}

/// A power-law rate (or log-MGF) function `prefactor · x^exponent` with a
/// support convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFunctionSpec {
    pub kind: RateKind,
    pub prefactor: f64,
    pub exponent: f64,
    pub support: Support,
}

fn require_ldp(m: &ModelParams) -> Result<()> {
    if m.ldp_valid() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "2H = {} >= alpha = {}: no large deviation principle for Z(t)",
            2.0 * m.hurst(),
            m.alpha()
        )))
    }
}

impl RateFunctionSpec {
    /// Λ₁(θ) = B₁ |θ|^(2α/(α−2H)), the limiting log-MGF of Z.
    pub fn lambda1(m: &ModelParams) -> Result<Self> {
        require_ldp(m)?;
        Ok(Self {
            kind: RateKind::Lambda1,
            prefactor: growth_constant_b1(m)?,
            exponent: m.mgf_exponent().expect("ldp_valid checked"),
            support: Support::Even,
        })
    }

    /// Λ₁*(x) = ((α+2H)/(2α)) ((α−2H)/(2αB₁))^((α−2H)/(α+2H)) |x|^(2α/(α+2H)).
    pub fn lambda1_star(m: &ModelParams) -> Result<Self> {
        require_ldp(m)?;
        let a = m.alpha();
        let h = m.hurst();
        let b1 = growth_constant_b1(m)?;
        let prefactor = (a + 2.0 * h) / (2.0 * a) * ((a - 2.0 * h) / (2.0 * a * b1)).powf((a - 2.0 * h) / (a + 2.0 * h));
        Ok(Self { kind: RateKind::Lambda1Star, prefactor, exponent: m.tail_exponent(), support: Support::Even })
    }

    /// Λ₂(θ) = (b−a) C(α,ν,χ) θ^(α/(α−1)) for θ > 0, 0 otherwise.
    pub fn lambda2(p: &StableParams, a: f64, b: f64) -> Result<Self> {
        let al = p.alpha();
        Ok(Self {
            kind: RateKind::Lambda2,
            prefactor: lt_ldp_constant(p, a, b)?,
            exponent: al / (al - 1.0),
            support: Support::ZeroOnNonPositive,
        })
    }

    /// Λ₂*(x) = (x^α/α) [(α/(α−1))(b−a)C(α,ν,χ)]^−(α−1) for x > 0, +∞ otherwise.
    pub fn lambda2_star(p: &StableParams, a: f64, b: f64) -> Result<Self> {
        let al = p.alpha();
        let c = lt_ldp_constant(p, a, b)?;
        Ok(Self {
            kind: RateKind::Lambda2Star,
            prefactor: (al / (al - 1.0) * c).powf(-(al - 1.0)) / al,
            exponent: al,
            support: Support::InfiniteOnNonPositive,
        })
    }

    pub fn eval(&self, x: f64) -> ExtReal {
        rate_function(self, x)
    }
}

/// Evaluates the rate function; `x^γ` on negative x means `(x²)^(γ/2)` for even kinds.
pub fn rate_function(spec: &RateFunctionSpec, x: f64) -> ExtReal {
    match spec.support {
        Support::Even => ExtReal::Finite(spec.prefactor * (x * x).powf(spec.exponent / 2.0)),
        Support::ZeroOnNonPositive if x <= 0.0 => ExtReal::Finite(0.0),
        Support::InfiniteOnNonPositive if x <= 0.0 => ExtReal::PosInf,
        _ => ExtReal::Finite(spec.prefactor * x.powf(spec.exponent)),
    }
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Numerical Fenchel–Legendre transform `sup_θ (θx − Λ(θ))` over
/// `[theta_lo, theta_hi]`: grid search over `n_grid` points followed by a
/// golden-section polish of the bracketing cell.
///
/// Fails with [`Error::Window`] when the grid maximiser sits on an end of
/// the window, where the true supremum may lie outside.
pub fn legendre_numeric_fn<F: Fn(f64) -> f64>(
    lambda: F,
    x: f64,
    theta_lo: f64,
    theta_hi: f64,
    n_grid: usize,
) -> Result<f64> {
    if n_grid < 3 {
        return Err(Error::Argument(format!("n_grid = {n_grid} must be at least 3")));
    }
    if !(theta_lo < theta_hi) {
        return Err(Error::Argument(format!("empty window [{theta_lo}, {theta_hi}]")));
    }
    let step = (theta_hi - theta_lo) / (n_grid - 1) as f64;
    let theta_at = |i: usize| if i == n_grid - 1 { theta_hi } else { theta_lo + step * i as f64 };
    let g = |t: f64| t * x - lambda(t);
    // Ties go to the last index so that flat stretches (Λ₂ on θ ≤ 0) resolve
    // toward the interior.
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for i in 0..n_grid {
        let v = g(theta_at(i));
        if v >= best {
            best = v;
            best_i = i;
        }
    }
    if best_i == 0 || best_i == n_grid - 1 {
        return Err(Error::Window { theta: theta_at(best_i), lo: theta_lo, hi: theta_hi });
    }
    let (mut lo, mut hi) = (theta_at(best_i - 1), theta_at(best_i + 1));
    let mut c = hi - GOLDEN * (hi - lo);
    let mut d = lo + GOLDEN * (hi - lo);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..200 {
        if (hi - lo).abs() <= 1e-15 * (1.0 + c.abs()) {
            break;
        }
        if gc >= gd {
            hi = d;
            d = c;
            gd = gc;
            c = hi - GOLDEN * (hi - lo);
            gc = g(c);
        } else {
            lo = c;
            c = d;
            gc = gd;
            d = lo + GOLDEN * (hi - lo);
            gd = g(d);
        }
    }
    Ok(best.max(gc).max(gd))
}

/// [`legendre_numeric_fn`] applied to a rate specification. An infinite
/// value of Λ inside the window is treated as excluding that θ.
pub fn legendre_numeric(lambda: &RateFunctionSpec, x: f64, theta_lo: f64, theta_hi: f64, n_grid: usize) -> Result<f64> {
    legendre_numeric_fn(
        |t| match rate_function(lambda, t) {
            ExtReal::Finite(v) => v,
            ExtReal::PosInf => f64::INFINITY,
        },
        x,
        theta_lo,
        theta_hi,
        n_grid,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn anchor() -> ModelParams {
        ModelParams::gaussian_anchor()
    }

    #[test]
    fn anchor_closed_forms() {
        let l1 = RateFunctionSpec::lambda1(&anchor()).unwrap();
        assert_relative_eq!(l1.prefactor, 0.125, max_relative = 1e-14);
        assert_relative_eq!(l1.exponent, 4.0, max_relative = 1e-15);
        let s = RateFunctionSpec::lambda1_star(&anchor()).unwrap();
        assert_relative_eq!(s.prefactor, 0.75 * 2f64.cbrt(), max_relative = 1e-14);
        assert_relative_eq!(s.exponent, 4.0 / 3.0, max_relative = 1e-15);
        assert_eq!(rate_function(&s, 0.0), ExtReal::Finite(0.0));
        assert_eq!(rate_function(&s, -2.0), rate_function(&s, 2.0));
    }

    #[test]
    fn anchor_star_matches_grid_supremum() {
        // sup_θ (θx − θ⁴/8) on a plain grid, independent of the polish step
        for x in [0.3, 1.0, 2.5] {
            let mut best = f64::NEG_INFINITY;
            for i in 0..=400_000 {
                let t = i as f64 * 1e-5;
                best = best.max(t * x - t.powi(4) / 8.0);
            }
            let s = RateFunctionSpec::lambda1_star(&anchor()).unwrap();
            assert_relative_eq!(s.eval(x).to_f64(), best, max_relative = 1e-6);
        }
    }

    #[test]
    fn lambda2_support() {
        let p = StableParams::brownian();
        let l2 = RateFunctionSpec::lambda2(&p, 0.0, 1.0).unwrap();
        assert_relative_eq!(l2.prefactor, 0.5, max_relative = 1e-14);
        assert_eq!(l2.eval(-3.0), ExtReal::Finite(0.0));
        assert_eq!(l2.eval(0.0), ExtReal::Finite(0.0));
        let s = RateFunctionSpec::lambda2_star(&p, 0.0, 1.0).unwrap();
        assert_eq!(s.eval(-1.0), ExtReal::PosInf);
        assert_eq!(s.eval(0.0), ExtReal::PosInf);
        // half-normal tail: x²/2
        assert_relative_eq!(s.eval(3.0).to_f64(), 4.5, max_relative = 1e-14);
        assert!(RateFunctionSpec::lambda2(&p, 1.0, 1.0).is_err());
    }

    #[test]
    fn ldp_guard() {
        let m = ModelParams::from_parts(1.2, 0.0, 1.0, 0.7).unwrap();
        assert!(RateFunctionSpec::lambda1(&m).is_err());
        assert!(RateFunctionSpec::lambda1_star(&m).is_err());
    }

    #[test]
    fn numeric_legendre_quadratic() {
        let v = legendre_numeric_fn(|t| t * t, 2.0, -5.0, 5.0, 101).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-12);
        let v = legendre_numeric_fn(|t| t * t, 0.0, -5.0, 5.0, 100).unwrap();
        assert!(v.abs() < 1e-14);
        assert!(matches!(legendre_numeric_fn(|t| t * t, 20.0, -5.0, 5.0, 101), Err(Error::Window { .. })));
        assert!(legendre_numeric_fn(|t| t * t, 1.0, -5.0, 5.0, 2).is_err());
        assert!(legendre_numeric_fn(|t| t * t, 1.0, 5.0, 5.0, 10).is_err());
    }

    #[test]
    fn numeric_legendre_of_lambda1_matches_star() {
        let l1 = RateFunctionSpec::lambda1(&anchor()).unwrap();
        let s = RateFunctionSpec::lambda1_star(&anchor()).unwrap();
        let v = legendre_numeric(&l1, 1.0, -10.0, 10.0, 2001).unwrap();
        assert_relative_eq!(v, s.eval(1.0).to_f64(), max_relative = 1e-6);
    }

    #[test]
    fn numeric_legendre_of_lambda2_matches_star() {
        for al in [1.3, 1.6, 2.0] {
            let p = StableParams::new(al, 0.4, 1.5).unwrap();
            let l2 = RateFunctionSpec::lambda2(&p, 0.5, 2.0).unwrap();
            let s = RateFunctionSpec::lambda2_star(&p, 0.5, 2.0).unwrap();
            for x in [0.2, 1.0, 3.0] {
                let v = legendre_numeric(&l2, x, -5.0, 20.0, 5001).unwrap();
                assert_relative_eq!(v, s.eval(x).to_f64(), max_relative = 1e-6);
            }
            // x < 0 pushes the maximiser to −∞
            assert!(legendre_numeric(&l2, -1.0, -5.0, 20.0, 501).is_err());
        }
    }

    #[test]
    fn nested_grid_refinement_is_monotone() {
        let l1 = RateFunctionSpec::lambda1(&ModelParams::from_parts(1.7, 0.2, 1.0, 0.3).unwrap()).unwrap();
        let mut prev = f64::NEG_INFINITY;
        let mut n = 5;
        while n < 5000 {
            let grid_only = {
                let mut best = f64::NEG_INFINITY;
                for i in 0..n {
                    let t = -4.0 + 8.0 * i as f64 / (n - 1) as f64;
                    best = best.max(t * 0.7 - l1.eval(t).to_f64());
                }
                best
            };
            let v = legendre_numeric(&l1, 0.7, -4.0, 4.0, n).unwrap();
            assert!(v >= grid_only);
            assert!(v >= prev - 1e-15);
            prev = v;
            n = 2 * n - 1;
        }
    }
}
