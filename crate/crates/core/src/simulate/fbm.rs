use std::sync::Arc;

use rand::Rng as _;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::rng::Rng;
use crate::{Error, Result};

/// Autocovariance of unit-step fractional Gaussian noise at lag k.
pub fn fgn_autocov(hurst: f64, k: usize) -> f64 {
    let k = k as f64;
    let h2 = 2.0 * hurst;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// Circulant-embedding (Davies–Harte) generator of fBm paths with a fixed
/// number of increments. Building it costs one FFT; every path afterwards
/// costs one more, so reuse it across replicates.
pub struct FbmGenerator {
    hurst: f64,
    n: usize,
    sqrt_eig: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FbmGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FbmGenerator").field("hurst", &self.hurst).field("n", &self.n).field("embedding", &self.sqrt_eig.len()).finish()
    }
}

const MAX_DOUBLINGS: usize = 4;

impl FbmGenerator {
    /// Generator for paths with `n` increments (n + 1 points).
    pub fn new(hurst: f64, n: usize) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::InvalidParameter(format!("hurst = {hurst} must lie in (0, 1)")));
        }
        if n < 1 {
            return Err(Error::Argument("fBm grid needs at least one increment".into()));
        }
        let mut planner = FftPlanner::new();
        let mut m = n.next_power_of_two();
        for _ in 0..=MAX_DOUBLINGS {
            let size = 2 * m;
            let fft = planner.plan_fft_forward(size);
            let mut c: Vec<Complex<f64>> = (0..size)
                .map(|j| Complex::new(fgn_autocov(hurst, if j <= m { j } else { size - j }), 0.0))
                .collect();
            fft.process(&mut c);
            let max = c.iter().map(|z| z.re).fold(0.0, f64::max);
            let min = c.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
            if min >= -1e-10 * max {
                let sqrt_eig = c.iter().map(|z| (z.re.max(0.0) / size as f64).sqrt()).collect();
                return Ok(Self { hurst, n, sqrt_eig, fft });
            }
            m *= 2;
        }
        Err(Error::Embedding(format!(
            "negative circulant eigenvalue for H = {hurst}, n = {n} after {MAX_DOUBLINGS} doublings"
        )))
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn increments(&self) -> usize {
        self.n
    }

    /// Size of the circulant embedding actually used.
    pub fn embedding_size(&self) -> usize {
        self.sqrt_eig.len()
    }

    /// Fills `out` (length n + 1) with W^H on `{0, dt, …, n dt}`.
    pub fn fill(&self, dt: f64, rng: &mut Rng, out: &mut [f64]) {
        assert_eq!(out.len(), self.n + 1);
        let mut buf: Vec<Complex<f64>> = self
            .sqrt_eig
            .iter()
            .map(|s| {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                Complex::new(s * a, s * b)
            })
            .collect();
        self.fft.process(&mut buf);
        let scale = dt.powf(self.hurst);
        out[0] = 0.0;
        let mut acc = 0.0;
        for k in 0..self.n {
            acc += buf[k].re;
            out[k + 1] = acc * scale;
        }
    }

    pub fn path(&self, dt: f64, rng: &mut Rng) -> Vec<f64> {
        let mut v = vec![0.0; self.n + 1];
        self.fill(dt, rng, &mut v);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn autocovariance_at_half_is_white() {
        assert_eq!(fgn_autocov(0.5, 0), 1.0);
        assert!(fgn_autocov(0.5, 1).abs() < 1e-15);
        assert!(fgn_autocov(0.8, 1) > 0.0);
        assert!(fgn_autocov(0.2, 1) < 0.0);
    }

    #[test]
    fn embedding_is_valid_over_hurst_range() {
        for h in [0.05, 0.25, 0.5, 0.75, 0.95] {
            let g = FbmGenerator::new(h, 1000).unwrap();
            assert_eq!(g.embedding_size(), 2048);
        }
        assert!(FbmGenerator::new(1.0, 10).is_err());
        assert!(FbmGenerator::new(0.5, 0).is_err());
    }

    #[test]
    fn brownian_increments_uncorrelated() {
        let g = FbmGenerator::new(0.5, 1 << 20).unwrap();
        let p = g.path(1.0, &mut stream(1, 0));
        let inc: Vec<f64> = p.windows(2).map(|w| w[1] - w[0]).collect();
        let n = inc.len() as f64;
        let r1 = inc.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / n;
        assert!(r1.abs() < 4.0 / n.sqrt(), "{r1}");
    }

    #[test]
    fn covariance_matches_fbm_on_small_grid() {
        // 8-point grid, entrywise against (s^2H + t^2H − |t−s|^2H)/2
        let h = 0.75;
        let g = FbmGenerator::new(h, 8).unwrap();
        let reps = 200_000;
        let mut r = stream(2, 0);
        let mut sums = [[0.0f64; 9]; 9];
        let mut sq = [[0.0f64; 9]; 9];
        let mut buf = vec![0.0; 9];
        for _ in 0..reps {
            g.fill(0.125, &mut r, &mut buf);
            for i in 1..9 {
                for j in i..9 {
                    let v = buf[i] * buf[j];
                    sums[i][j] += v;
                    sq[i][j] += v * v;
                }
            }
        }
        for i in 1..9 {
            for j in i..9 {
                let (s, t) = (i as f64 / 8.0, j as f64 / 8.0);
                let target = 0.5 * (s.powf(2.0 * h) + t.powf(2.0 * h) - (t - s).powf(2.0 * h));
                let m = sums[i][j] / reps as f64;
                let se = ((sq[i][j] / reps as f64 - m * m) / reps as f64).sqrt();
                assert!((m - target).abs() < 4.0 * se, "({i},{j}) {m} vs {target}");
            }
        }
    }
}
