//! Quadrature rules shared by every module: Gauss–Legendre nodes, composite
//! panels, and a globally adaptive Gauss–Kronrod (7, 15) integrator that works
//! for real and complex integrands.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Sub};

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    if n == 0 {
        return (x, w);
    }
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi initial guess, refined by Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Maps a reference rule on `[-1, 1]` onto `[a, b]`, appending to `nodes` and
/// `weights`.
pub fn push_mapped(
    rule: &(Vec<f64>, Vec<f64>),
    a: f64,
    b: f64,
    nodes: &mut Vec<f64>,
    weights: &mut Vec<f64>,
) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    for (x, w) in rule.0.iter().zip(&rule.1) {
        nodes.push(mid + half * x);
        weights.push(half * w);
    }
}

/// Values an adaptive rule can integrate.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> {
    fn zero() -> Self;
    fn scale(self, s: f64) -> Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One Gauss–Kronrod (7, 15) panel: returns (Kronrod estimate, |K − G|).
pub fn gk15<T, F>(f: &mut F, a: f64, b: f64) -> (T, f64)
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc.scale(WGK[7]);
    let mut gauss = fc.scale(WG[3]);
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron = kron + s.scale(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + s.scale(WG[j / 2]);
        }
    }
    let k = kron.scale(h);
    let g = gauss.scale(h);
    (k, (k - g).magnitude())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

/// Globally adaptive Gauss–Kronrod integration on `[a, b]`.
///
/// Bisects the panel with the largest error estimate until the summed estimate
/// is below `max(abs_tol, rel_tol·|I|)`. Fails with [`Error::Convergence`] once
/// `max_panels` is exhausted.
pub fn adaptive<T, F>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<Estimate<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let (v, e) = gk15(&mut f, a, b);
    let mut panels: Vec<(f64, f64, T, f64)> = alloc::vec![(a, b, v, e)];
    let mut evaluations = 15;
    loop {
        let mut total = T::zero();
        let mut err = 0.0;
        let mut worst = 0;
        for (i, p) in panels.iter().enumerate() {
            total = total + p.2;
            err += p.3;
            if p.3 > panels[worst].3 {
                worst = i;
            }
        }
        let target = abs_tol.max(rel_tol * total.magnitude());
        if err <= target {
            return Ok(Estimate {
                value: total,
                error: err,
                evaluations,
            });
        }
        if panels.len() >= max_panels {
            return Err(Error::Convergence {
                estimate: err,
                tolerance: target,
            });
        }
        let (lo, hi, _, _) = panels[worst];
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            // Panel can no longer be split in f64; accept what we have.
            return Ok(Estimate {
                value: total,
                error: err,
                evaluations,
            });
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        evaluations += 30;
        panels[worst] = (lo, mid, v1, e1);
        panels.push((mid, hi, v2, e2));
    }
}

/// Adaptive integration after pre-splitting `[a, b]` at the given interior
/// breakpoints; each piece receives a share of the absolute tolerance.
pub fn adaptive_split<T, F>(
    mut f: F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<Estimate<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let pieces = breaks.len().saturating_sub(1).max(1);
    let share = abs_tol / pieces as f64;
    let mut value = T::zero();
    let mut error = 0.0;
    let mut evaluations = 0;
    for win in breaks.windows(2) {
        let est = adaptive(&mut f, win[0], win[1], share, rel_tol, max_panels)?;
        value = value + est.value;
        error += est.error;
        evaluations += est.evaluations;
    }
    Ok(Estimate {
        value,
        error,
        evaluations,
    })
}

/// Polynomial (Neville) extrapolation to `h = 0` from samples `(h_i, v_i)`.
/// Returns the extrapolated value and, as an error indicator, its distance
/// from the extrapolation that drops the first (largest `h`) sample.
pub fn richardson(hs: &[f64], vs: &[Complex64]) -> (Complex64, f64) {
    let n = hs.len();
    let full = neville_at_zero(hs, vs);
    if n < 2 {
        return (full, f64::INFINITY);
    }
    let reduced = neville_at_zero(&hs[1..], &vs[1..]);
    (full, (full - reduced).norm())
}

fn neville_at_zero(hs: &[f64], vs: &[Complex64]) -> Complex64 {
    let mut p: Vec<Complex64> = vs.to_vec();
    let n = hs.len();
    for k in 1..n {
        for i in 0..n - k {
            let (hi, hk) = (hs[i], hs[i + k]);
            p[i] = (p[i + 1] * hi - p[i] * hk) / (hi - hk);
        }
    }
    p[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(12);
        let sum: f64 = w.iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
        // ∫ x^22 over [-1,1] = 2/23
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(22)).sum();
        assert!((v - 2.0 / 23.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_large_order_is_stable() {
        let (x, w) = gauss_legendre(400);
        let sum: f64 = w.iter().sum();
        assert!((sum - 2.0).abs() < 1e-13);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * (3.0 * x).cos()).sum();
        assert!((v - 2.0 * 3.0f64.sin() / 3.0).abs() < 1e-13);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let est = adaptive(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-10, 0.0, 2000).unwrap();
        assert!((est.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn adaptive_complex_oscillatory() {
        let est = adaptive(
            |x: f64| Complex64::new(0.0, 50.0 * x).exp(),
            0.0,
            1.0,
            1e-12,
            0.0,
            2000,
        )
        .unwrap();
        let exact = (Complex64::new(0.0, 50.0).exp() - 1.0) / Complex64::new(0.0, 50.0);
        assert!((est.value - exact).norm() < 1e-11);
    }

    #[test]
    fn richardson_removes_linear_and_quadratic_terms() {
        let hs = [1e-1, 1e-2, 1e-3];
        let vs: Vec<Complex64> = hs
            .iter()
            .map(|h| Complex64::new(2.0 + 3.0 * h - 5.0 * h * h, -1.0 + h))
            .collect();
        let (v, _) = richardson(&hs, &vs);
        assert!((v - Complex64::new(2.0, -1.0)).norm() < 1e-12);
    }
}
