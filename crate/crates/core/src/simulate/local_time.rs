use crate::model::{a1, StableParams};
use crate::rng::Rng;
use crate::{Error, Result};

use super::stable::{kanter_a, kanter_u, positive_stable};
use super::GridPath;

/// Occupation-density estimate `L̂_t = dt/(2ε) · #{s ≤ t : |X_s| ≤ ε}`.
///
/// The count includes the starting point, so `L̂_0 = dt/(2ε)` when X(0) = 0.
pub fn local_time_occupation(x: &GridPath, epsilon: f64) -> Result<GridPath> {
    if !(epsilon > 0.0) {
        return Err(Error::Argument(format!("epsilon = {epsilon} must be positive")));
    }
    let w = x.dt / (2.0 * epsilon);
    let mut count = 0u64;
    let values = x
        .values
        .iter()
        .map(|v| {
            if v.abs() <= epsilon {
                count += 1;
            }
            count as f64 * w
        })
        .collect();
    GridPath::new(x.t0, x.dt, values, true)
}

/// Index of the subordinator whose inverse is the local time, `1 − 1/α`.
pub fn subordinator_index(p: &StableParams) -> f64 {
    p.lt_index()
}

pub(crate) fn require_symmetric(p: &StableParams) -> Result<()> {
    if p.nu() != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "the inverse-subordinator local time is calibrated for nu = 0 only (got nu = {}); use the occupation method",
            p.nu()
        )));
    }
    Ok(())
}

/// `L_t = A₁ · inf{u : S_u > t}` at the ascending `times`, where S is the
/// stable subordinator with `E exp(−λ S_u) = exp(−u λ^(1−1/α))`, simulated on
/// a u-grid of step `du` with linear interpolation of the inverse inside a step.
///
/// The factor A₁ makes `E L_1` equal the exact first moment; with it all
/// integer moments of `L_t` agree with the closed form.
pub fn inverse_subordinator_at(p: &StableParams, times: &[f64], du: f64, rng: &mut Rng) -> Result<Vec<f64>> {
    require_symmetric(p)?;
    if !(du > 0.0) {
        return Err(Error::Argument(format!("u-step {du} must be positive")));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|t| *t < 0.0) {
        return Err(Error::Argument("times must be nonnegative and ascending".into()));
    }
    let a = subordinator_index(p);
    let c = a1(p);
    let jump_scale = du.powf(1.0 / a);
    let mut out = Vec::with_capacity(times.len());
    let (mut s_prev, mut u_prev) = (0.0f64, 0.0f64);
    let mut idx = 0;
    while idx < times.len() {
        let s_next = s_prev + jump_scale * positive_stable(a, rng);
        while idx < times.len() && times[idx] < s_next {
            let frac = (times[idx] - s_prev) / (s_next - s_prev);
            out.push(c * (u_prev + du * frac));
            idx += 1;
        }
        s_prev = s_next;
        u_prev += du;
    }
    Ok(out)
}

/// Default u-step for a time grid of step `dt`: an eighth of the natural
/// local-time scale `dt^(1−1/α)`.
pub fn default_u_step(p: &StableParams, dt: f64) -> f64 {
    dt.powf(p.lt_index()) / 8.0
}

/// Local-time path on `{0, dt, …, n dt}` from the inverse subordinator.
pub fn local_time_inverse_subordinator(p: &StableParams, n: usize, dt: f64, rng: &mut Rng) -> Result<GridPath> {
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
    let values = inverse_subordinator_at(p, &times, default_u_step(p, dt), rng)?;
    GridPath::new(0.0, dt, values, true)
}

/// A draw of `L_b` together with Kanter's `A(U)` that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LtDraw {
    pub value: f64,
    pub kanter: f64,
}

/// Exact draw of `L_b` for a process started at zero: `L_b` is Mittag-Leffler,
/// `A₁ b^(1−1/α) S^(−(1−1/α))` with S positive stable, for every ν.
/// Conditionally on U, `P(L_b > x | U) = exp(−A(U) (x / (A₁ b^(1−1/α)))^α)`.
pub fn lt_marginal(p: &StableParams, b: f64, rng: &mut Rng) -> LtDraw {
    use rand::Rng as _;
    let a = subordinator_index(p);
    let u = kanter_u(rng);
    let e: f64 = rng.sample(rand_distr::Exp1);
    let k = kanter_a(a, u);
    LtDraw { value: a1(p) * b.powf(a) * (e / k).powf(1.0 - a), kanter: k }
}

/// `log P(L_b > x | U)` for a draw of [`lt_marginal`].
pub fn lt_conditional_log_sf(p: &StableParams, b: f64, kanter: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    -kanter * (x / (a1(p) * b.powf(p.lt_index()))).powf(p.alpha())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::lt_moment_exact;
    use crate::rng::stream;
    use crate::stats::mean_se;

    #[test]
    fn occupation_counts_visits() {
        let x = GridPath::new(0.0, 0.1, vec![0.0, 1.0, 0.05, -0.02, 3.0], false).unwrap();
        let l = local_time_occupation(&x, 0.1).unwrap();
        assert_eq!(l.values, vec![0.5, 0.5, 1.0, 1.5, 1.5]);
        let far = GridPath::new(0.0, 0.1, vec![5.0, 1.0, 2.0], false).unwrap();
        assert!(local_time_occupation(&far, 0.1).unwrap().values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn marginal_moments_match_closed_form() {
        for al in [1.3, 1.5, 2.0] {
            let p = StableParams::new(al, 0.0, 1.0).unwrap();
            let mut r = stream(4, 0);
            let xs: Vec<f64> = (0..200_000).map(|_| lt_marginal(&p, 1.0, &mut r).value).collect();
            for n in 1..=3 {
                let v: Vec<f64> = xs.iter().map(|x| x.powi(n)).collect();
                let m = mean_se(&v);
                let t = lt_moment_exact(&p, n as f64, 1.0);
                assert!((m.mean - t).abs() < 4.0 * m.se, "alpha {al} n {n}: {} vs {t}", m.mean);
            }
        }
    }

    #[test]
    fn conditional_survival_averages_to_empirical() {
        let p = StableParams::brownian();
        let mut r = stream(5, 0);
        let draws: Vec<LtDraw> = (0..100_000).map(|_| lt_marginal(&p, 1.0, &mut r)).collect();
        for x in [0.5, 1.5, 2.5] {
            let cond = draws.iter().map(|d| lt_conditional_log_sf(&p, 1.0, d.kanter, x).exp()).sum::<f64>() / 1e5;
            // L₁ = |N| at the anchor
            let exact = 2.0 * crate::special::normal_sf(x);
            assert!((cond - exact).abs() < 0.01 * exact + 1e-4, "{x}: {cond} vs {exact}");
        }
    }

    #[test]
    fn subordinator_path_is_monotone_with_right_mean() {
        let p = StableParams::new(1.5, 0.0, 1.0).unwrap();
        let mut r = stream(6, 0);
        let mut ends = vec![];
        for _ in 0..20_000 {
            let v = inverse_subordinator_at(&p, &[0.0, 0.5, 1.0], default_u_step(&p, 1.0 / 1024.0), &mut r).unwrap();
            assert_eq!(v[0], 0.0);
            assert!(v[1] <= v[2]);
            ends.push(v[2]);
        }
        let m = mean_se(&ends);
        let t = lt_moment_exact(&p, 1.0, 1.0);
        assert!((m.mean - t).abs() < 3.0 * m.se + 0.002, "{} vs {t}", m.mean);
        let skew = StableParams::new(1.5, 0.3, 1.0).unwrap();
        assert!(inverse_subordinator_at(&skew, &[1.0], 0.01, &mut r).is_err());
    }
}
