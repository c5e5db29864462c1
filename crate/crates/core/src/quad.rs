//! Adaptive Gauss–Kronrod (7/15) quadrature with a global error estimate.

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let f1 = f(c - h * x);
        let f2 = f(c + h * x);
        kronrod += w * (f1 + f2);
        // odd Kronrod nodes coincide with the Gauss nodes
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Segment {
        a,
        b,
        value: kronrod * h,
        error: ((kronrod - gauss) * h).abs(),
    }
}

/// Integrates `f` over `[a, b]` until the summed error estimate drops below
/// `max(abs_tol, rel_tol·|I|)`. Bisects the worst segment first.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::Argument(format!("bad quadrature interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, abs_error: 0.0, intervals: 0 });
    }
    let mut segments = vec![gk15(&f, a, b)];
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        let target = abs_tol.max(rel_tol * value.abs());
        if error <= target || (error == 0.0) {
            return Ok(QuadResult { value, abs_error: error, intervals: segments.len() });
        }
        if segments.len() >= max_intervals {
            return Err(Error::Quadrature { value, achieved: error, requested: target });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty");
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            // interval no longer splittable in f64
            return Err(Error::Quadrature { value, achieved: error, requested: target });
        }
        segments.push(gk15(&f, s.a, mid));
        segments.push(gk15(&f, mid, s.b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x, 0.0, 2.0, 1e-14, 0.0, 50).unwrap();
        assert_relative_eq!(r.value, 64.0 / 6.0 - 6.0, max_relative = 1e-14);
    }

    #[test]
    fn peaked_integrand_refines() {
        let r = integrate(|x| (-1e4 * (x - 0.3).powi(2)).exp(), 0.0, 1.0, 1e-12, 0.0, 500)
            .unwrap();
        assert_relative_eq!(r.value, (std::f64::consts::PI / 1e4).sqrt(), max_relative = 1e-10);
        assert!(r.intervals > 1);
    }

    #[test]
    fn non_convergence_reports_error_estimate() {
        let err = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-15, 0.0, 3).unwrap_err();
        match err {
            Error::Quadrature { achieved, requested, .. } => assert!(achieved > requested),
            other => panic!("unexpected {other:?}"),
        }
    }
}
