//! Parameter records, closed-form constants, moment formulas and rate
//! functions.

mod constants;
mod moments;
mod rate;

pub use constants::*;
pub use moments::*;
pub use rate::*;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Index α, skewness ν and scale χ of a strictly stable Lévy process with
/// characteristic exponent `|ξ|^α (1 + iν sgn(ξ) tan(πα/2)) / χ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStable")]
pub struct StableParams {
    alpha: f64,
    nu: f64,
    chi: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStable {
    alpha: f64,
    nu: f64,
    chi: f64,
}

impl TryFrom<RawStable> for StableParams {
    type Error = Error;
    fn try_from(r: RawStable) -> Result<Self> {
        StableParams::new(r.alpha, r.nu, r.chi)
    }
}

impl StableParams {
    pub fn new(alpha: f64, nu: f64, chi: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {alpha} must lie in (1, 2]; no local time exists otherwise"
            )));
        }
        if !(-1.0..=1.0).contains(&nu) {
            return Err(Error::InvalidParameter(format!("nu = {nu} must lie in [-1, 1]")));
        }
        if !(chi > 0.0 && chi.is_finite()) {
            return Err(Error::InvalidParameter(format!("chi = {chi} must be positive")));
        }
        Ok(Self { alpha, nu, chi })
    }

    /// Standard Brownian motion: α = 2, χ = 2.
    pub fn brownian() -> Self {
        Self { alpha: 2.0, nu: 0.0, chi: 2.0 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn chi(&self) -> f64 {
        self.chi
    }

    /// Self-similarity index of the local time, `1 − 1/α`.
    pub fn lt_index(&self) -> f64 {
        1.0 - 1.0 / self.alpha
    }

    /// `ν tan(πα/2)`, exactly zero at α = 2.
    pub fn skew_tan(&self) -> f64 {
        self.nu * crate::special::tan_half_pi_alpha(self.alpha)
    }

    /// The characteristic exponent φ(ξ) as (real, imaginary) parts.
    pub fn char_exponent(&self, xi: f64) -> (f64, f64) {
        let m = xi.abs().powf(self.alpha) / self.chi;
        (m, m * self.skew_tan() * xi.signum())
    }
}

/// Stable parameters plus the Hurst index of the outer fBm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct ModelParams {
    stable: StableParams,
    hurst: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    stable: StableParams,
    hurst: f64,
}

impl TryFrom<RawModel> for ModelParams {
    type Error = Error;
    fn try_from(r: RawModel) -> Result<Self> {
        ModelParams::new(r.stable, r.hurst)
    }
}

impl ModelParams {
    pub fn new(stable: StableParams, hurst: f64) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::InvalidParameter(format!("hurst = {hurst} must lie in (0, 1)")));
        }
        Ok(Self { stable, hurst })
    }

    pub fn from_parts(alpha: f64, nu: f64, chi: f64, hurst: f64) -> Result<Self> {
        Self::new(StableParams::new(alpha, nu, chi)?, hurst)
    }

    /// α = 2, ν = 0, χ = 2, H = 1/2: Brownian motion run by Brownian local time.
    pub fn gaussian_anchor() -> Self {
        Self { stable: StableParams::brownian(), hurst: 0.5 }
    }

    pub fn stable(&self) -> &StableParams {
        &self.stable
    }
    pub fn hurst(&self) -> f64 {
        self.hurst
    }
    pub fn alpha(&self) -> f64 {
        self.stable.alpha
    }

    /// `H(1 − 1/α)`.
    pub fn selfsim_index(&self) -> f64 {
        self.hurst * (1.0 - 1.0 / self.alpha())
    }

    /// 2H < α: the moment generating function of Z(t) is finite.
    pub fn ldp_valid(&self) -> bool {
        2.0 * self.hurst < self.alpha()
    }

    /// `2α/(α − 2H)`, the growth exponent of Λ₁.
    pub fn mgf_exponent(&self) -> Option<f64> {
        self.ldp_valid().then(|| 2.0 * self.alpha() / (self.alpha() - 2.0 * self.hurst))
    }

    /// `2H(α − 1)/(α − 2H)`, the speed exponent of the large deviation principle.
    pub fn ldp_time_exponent(&self) -> Option<f64> {
        let a = self.alpha();
        self.ldp_valid().then(|| 2.0 * self.hurst * (a - 1.0) / (a - 2.0 * self.hurst))
    }

    /// `2α/(α + 2H)`, the exponent of the increment tail.
    pub fn tail_exponent(&self) -> f64 {
        2.0 * self.alpha() / (self.alpha() + 2.0 * self.hurst)
    }

    /// `2α/(2H + α)`: the power β below which `E exp(t|ΔZ|^β)` is entire.
    pub fn beta_threshold(&self) -> f64 {
        2.0 * self.alpha() / (2.0 * self.hurst + self.alpha())
    }

    /// `2H(α − 1)/(α + 2H)`, the interval-length exponent in the tail bounds.
    pub fn interval_exponent(&self) -> f64 {
        let a = self.alpha();
        2.0 * self.hurst * (a - 1.0) / (a + 2.0 * self.hurst)
    }

    /// `(α + 2H)/(2α)`, the power of the logarithmic factor in the moduli.
    pub fn log_power(&self) -> f64 {
        (self.alpha() + 2.0 * self.hurst) / (2.0 * self.alpha())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_rejects_out_of_range() {
        assert!(StableParams::new(1.0, 0.0, 1.0).is_err());
        assert!(StableParams::new(2.01, 0.0, 1.0).is_err());
        assert!(StableParams::new(1.5, 1.01, 1.0).is_err());
        assert!(StableParams::new(1.5, 0.0, 0.0).is_err());
        assert!(StableParams::new(1.5, 0.0, f64::NAN).is_err());
        assert!(StableParams::new(2.0, -1.0, 0.1).is_ok());
        let p = StableParams::brownian();
        assert!(ModelParams::new(p, 0.0).is_err());
        assert!(ModelParams::new(p, 1.0).is_err());
    }

    #[test]
    fn derived_exponents_at_anchor() {
        let m = ModelParams::gaussian_anchor();
        assert_eq!(m.selfsim_index(), 0.25);
        assert_eq!(m.mgf_exponent(), Some(4.0));
        assert_eq!(m.ldp_time_exponent(), Some(1.0));
        assert!((m.tail_exponent() - 4.0 / 3.0).abs() < 1e-15);
        assert!((m.beta_threshold() - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mgf_exponent_absent_without_ldp() {
        let m = ModelParams::from_parts(1.5, 0.0, 1.0, 0.8).unwrap();
        assert!(!m.ldp_valid());
        assert_eq!(m.mgf_exponent(), None);
        assert_eq!(m.ldp_time_exponent(), None);
    }

    #[test]
    fn serde_validates() {
        let ok: ModelParams = serde_json::from_str(
            r#"{"stable":{"alpha":1.5,"nu":0.0,"chi":1.0},"hurst":0.3}"#,
        )
        .unwrap();
        assert_eq!(ok.hurst(), 0.3);
        assert!(serde_json::from_str::<StableParams>(r#"{"alpha":0.9,"nu":0.0,"chi":1.0}"#)
            .is_err());
        assert!(serde_json::from_str::<StableParams>(
            r#"{"alpha":1.5,"nu":0.0,"chi":1.0,"beta":2}"#
        )
        .is_err());
    }
}
