//! Half-integer Bessel functions, normalized associated Legendre functions and
//! complex spherical harmonics.
//!
//! Everything here is a pure function of its arguments. `J_{ℓ+1/2}` is routed
//! by region: closed forms for `ℓ ≤ 1`, upward recurrence once `x ≥ ℓ`, the
//! ascending series for small `x`, and Miller's downward recurrence otherwise.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_2_PI, PI};

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{domain, Error, Result};

/// Hard cap on the angular order accepted by the checked entry points.
pub const L_MAX_SUPPORTED: usize = 256;

/// Order `ν = ℓ + 1/2` of a half-integer Bessel function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfIntOrder(usize);

impl HalfIntOrder {
    pub fn new(ell: usize) -> Result<Self> {
        if ell > L_MAX_SUPPORTED {
            return Err(Error::Order {
                ell,
                cap: L_MAX_SUPPORTED,
            });
        }
        Ok(Self(ell))
    }

    pub fn ell(self) -> usize {
        self.0
    }

    pub fn nu(self) -> f64 {
        self.0 as f64 + 0.5
    }
}

fn check_positive(name: &'static str, x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(domain(name, x, "must be finite"));
    }
    if x <= 0.0 {
        return Err(domain(name, x, "must be positive"));
    }
    Ok(())
}

/// `J_{ℓ+1/2}(x)` for `x > 0`.
pub fn bessel_j_half(order: HalfIntOrder, x: f64) -> Result<f64> {
    check_positive("x", x)?;
    Ok(j_half_unchecked(order.ell(), x))
}

/// Region dispatch without argument checks; `x` must be positive and finite.
pub(crate) fn j_half_unchecked(ell: usize, x: f64) -> f64 {
    match ell {
        0 => (FRAC_2_PI / x).sqrt() * x.sin(),
        1 if x < 1.0 => bessel_j_half_series(1, x),
        1 => (FRAC_2_PI / x).sqrt() * (x.sin() / x - x.cos()),
        _ if x >= ell as f64 => bessel_j_half_upward(ell, x),
        _ if x * x < 4.0 * ell as f64 + 6.0 => bessel_j_half_series(ell, x),
        _ => bessel_j_half_miller(ell, x),
    }
}

/// `ln Γ(ℓ + 3/2)`.
fn ln_gamma_half(ell: usize) -> f64 {
    let mut s = 0.5 * PI.ln();
    for i in 0..=ell {
        s += (i as f64 + 0.5).ln();
    }
    s
}

/// Ascending series `(x/2)^ν Σ (−x²/4)^k / (k! Γ(k+ν+1))`, prefactor in logs.
pub fn bessel_j_half_series(ell: usize, x: f64) -> f64 {
    let nu = ell as f64 + 0.5;
    let ln_pref = nu * (0.5 * x).ln() - ln_gamma_half(ell);
    let pref = ln_pref.exp();
    if pref == 0.0 {
        return 0.0;
    }
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..500 {
        let kf = k as f64;
        term *= q / ((kf + 1.0) * (kf + nu + 1.0));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    pref * sum
}

fn spherical_j0_j1(x: f64) -> (f64, f64) {
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    let j1 = if x < 1.0 {
        bessel_j_half_series(1, x) / (x * FRAC_2_PI).sqrt()
    } else {
        s / (x * x) - c / x
    };
    (j0, j1)
}

/// Upward three-term recurrence from the closed forms of `j₀, j₁`. Stable only
/// for `x ≳ ℓ`.
pub fn bessel_j_half_upward(ell: usize, x: f64) -> f64 {
    let (mut a, mut b) = spherical_j0_j1(x);
    if ell == 0 {
        return (x * FRAC_2_PI).sqrt() * a;
    }
    for n in 1..ell {
        let c = (2 * n + 1) as f64 / x * b - a;
        a = b;
        b = c;
    }
    (x * FRAC_2_PI).sqrt() * b
}

/// Starting index for Miller's recurrence.
fn miller_start(top: usize, x: f64) -> usize {
    let m = (top as f64).max(x);
    (m + 30.0 + 3.0 * m.sqrt()) as usize
}

/// Miller's downward recurrence, normalized against whichever of `j₀`, `j₁`
/// is larger in magnitude at `x`.
pub fn bessel_j_half_miller(ell: usize, x: f64) -> f64 {
    let start = miller_start(ell, x);
    let mut upper = 0.0;
    let mut cur = 1e-300;
    let mut at_ell = if start == ell { cur } else { 0.0 };
    let mut f1 = 0.0;
    for n in (1..=start).rev() {
        // f_{n-1} = (2n+1)/x f_n − f_{n+1}
        let lower = (2 * n + 1) as f64 / x * cur - upper;
        upper = cur;
        cur = lower;
        if n - 1 == ell {
            at_ell = cur;
        }
        if n - 1 == 1 {
            f1 = cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            upper *= 1e-250;
            at_ell *= 1e-250;
            f1 *= 1e-250;
        }
    }
    let f0 = cur;
    let (j0, j1) = spherical_j0_j1(x);
    let scale = if j0.abs() >= j1.abs() {
        j0 / f0
    } else {
        j1 / f1
    };
    (x * FRAC_2_PI).sqrt() * at_ell * scale
}

/// `J_{ℓ+1/2}(x)` for every `ℓ = 0..=lmax` at one argument, written into `out`.
pub fn bessel_j_half_all(lmax: usize, x: f64, out: &mut [f64]) {
    debug_assert!(out.len() > lmax);
    let root = (x * FRAC_2_PI).sqrt();
    if x >= lmax as f64 || lmax <= 1 && x >= 1.0 {
        let (mut a, mut b) = spherical_j0_j1(x);
        out[0] = root * a;
        if lmax >= 1 {
            out[1] = root * b;
        }
        for n in 1..lmax {
            let c = (2 * n + 1) as f64 / x * b - a;
            a = b;
            b = c;
            out[n + 1] = root * b;
        }
        return;
    }
    let start = miller_start(lmax, x);
    let mut upper = 0.0;
    let mut cur = 1e-300;
    if start <= lmax {
        out[start] = cur;
    }
    for n in (1..=start).rev() {
        let lower = (2 * n + 1) as f64 / x * cur - upper;
        upper = cur;
        cur = lower;
        if n - 1 <= lmax {
            out[n - 1] = cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            upper *= 1e-250;
            let hi = lmax.min(start);
            for v in out[(n - 1).min(hi)..=hi].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let (j0, j1) = spherical_j0_j1(x);
    let scale = if j0.abs() >= j1.abs() || lmax == 0 {
        j0 / out[0]
    } else {
        j1 / out[1]
    };
    for v in out[..=lmax].iter_mut() {
        *v *= scale * root;
    }
}

/// `Y_{ℓ+1/2}(x)` by upward recurrence (always stable for the second kind).
pub fn bessel_y_half(ell: usize, x: f64) -> f64 {
    let (s, c) = x.sin_cos();
    let mut a = -c / x;
    let mut b = -c / (x * x) - s / x;
    if ell == 0 {
        return (x * FRAC_2_PI).sqrt() * a;
    }
    for n in 1..ell {
        let next = (2 * n + 1) as f64 / x * b - a;
        a = b;
        b = next;
    }
    (x * FRAC_2_PI).sqrt() * b
}

/// Ratios `K_{ℓ+3/2}/K_{ℓ+1/2}` and `ln K_{ℓ+1/2}` from the upward recurrence.
fn k_ratio_and_log(ell: usize, z: f64) -> (f64, f64) {
    let mut ln_k = 0.5 * (PI / (2.0 * z)).ln() - z;
    let mut s = 1.0 + 1.0 / z;
    for n in 1..=ell {
        ln_k += s.ln();
        s = 1.0 / s + (2 * n + 1) as f64 / z;
    }
    (s, ln_k)
}

/// `I_{ℓ+3/2}/I_{ℓ+1/2}` by backward recurrence of the ratio.
fn i_ratio(ell: usize, z: f64) -> f64 {
    let start = ell + 40 + (2.0 * z) as usize;
    let mut r = 0.0;
    for n in (ell + 1..=start).rev() {
        // r_{n-1} = I_{n+1/2}/I_{n-1/2} = 1 / ((2n+1)/z + r_n)
        r = 1.0 / ((2 * n + 1) as f64 / z + r);
    }
    r
}

/// `(I_{ℓ+1/2}(z), K_{ℓ+1/2}(z))` for `z > 0`.
///
/// Fails with [`Error::Overflow`] when `I` exceeds the f64 range; use
/// [`bessel_ik_product_half`] for the product, which never overflows.
pub fn bessel_ik_half(order: HalfIntOrder, z: f64) -> Result<(f64, f64)> {
    check_positive("z", z)?;
    let ell = order.ell();
    let (s, ln_k) = k_ratio_and_log(ell, z);
    let r = i_ratio(ell, z);
    let ln_i = -z.ln() - ln_k - (s + r).ln();
    if ln_i > f64::MAX.ln() {
        return Err(Error::Overflow {
            what: "modified Bessel I",
        });
    }
    Ok((ln_i.exp(), ln_k.exp()))
}

/// `I_{ℓ+1/2}(z)·K_{ℓ+1/2}(z)` through the Wronskian, without forming either
/// factor.
pub fn bessel_ik_product_half(order: HalfIntOrder, z: f64) -> Result<f64> {
    check_positive("z", z)?;
    let (s, _) = k_ratio_and_log(order.ell(), z);
    let r = i_ratio(order.ell(), z);
    Ok(1.0 / (z * (s + r)))
}

/// Amplitudes of the Hankel functions of order `ℓ + 1/2`:
/// `H⁽¹⁾(z) = √(2/(πz)) (−i)^{ℓ+1} e^{iz} S(z)` and
/// `H⁽²⁾(z) = √(2/(πz)) i^{ℓ+1} e^{−iz} S̃(z)`, returned as `(S, S̃)`.
///
/// Both sums terminate, so this is exact for any complex `z ≠ 0`; it is well
/// conditioned once `|z| ≳ ℓ`.
pub fn hankel_amplitudes(ell: usize, z: Complex64) -> (Complex64, Complex64) {
    let inv = 1.0 / (2.0 * z);
    let i = Complex64::new(0.0, 1.0);
    let mut a = 1.0f64;
    let mut p = Complex64::new(1.0, 0.0);
    let mut s = Complex64::new(0.0, 0.0);
    let mut st = Complex64::new(0.0, 0.0);
    let mut ik = Complex64::new(1.0, 0.0);
    for k in 0..=ell {
        let t = p * a;
        s += ik * t;
        st += ik.conj() * t;
        a *= ((ell + k + 1) * (ell - k)) as f64 / (k + 1) as f64;
        p *= inv;
        ik *= i;
    }
    (s, st)
}

/// Index of `(ℓ, m ≥ 0)` in a triangular Legendre table.
#[inline]
pub fn tri_index(ell: usize, m: usize) -> usize {
    ell * (ell + 1) / 2 + m
}

/// Orthonormal associated Legendre functions
/// `P̄_ℓ^m(x) = √((2ℓ+1)/(4π) (ℓ−m)!/(ℓ+m)!) P_ℓ^m(x)` (Condon–Shortley
/// phase) for `0 ≤ m ≤ ℓ ≤ lmax`, stored by [`tri_index`].
pub fn legendre_normalized(lmax: usize, x: f64, sin_theta: f64, out: &mut [f64]) {
    debug_assert!(out.len() > tri_index(lmax, lmax));
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            let mf = m as f64;
            pmm *= -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_theta;
        }
        out[tri_index(m, m)] = pmm;
        if m == lmax {
            break;
        }
        let mut p_prev = pmm;
        let mut p_cur = (2.0 * m as f64 + 3.0).sqrt() * x * pmm;
        out[tri_index(m + 1, m)] = p_cur;
        let mf = m as f64;
        let mut a_prev = (2.0 * mf + 3.0).sqrt();
        for ell in (m + 2)..=lmax {
            let lf = ell as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let next = a * (x * p_cur - p_prev / a_prev);
            p_prev = p_cur;
            p_cur = next;
            a_prev = a;
            out[tri_index(ell, m)] = next;
        }
    }
}

/// Complex spherical harmonic `Y_{ℓ,m}(θ, φ)` with the Condon–Shortley phase.
pub fn sph_harm(ell: usize, m: i64, theta: f64, phi: f64) -> Result<Complex64> {
    if m.unsigned_abs() as usize > ell {
        return Err(Error::Index { ell, m });
    }
    let ma = m.unsigned_abs() as usize;
    let mut table: Vec<f64> = alloc::vec![0.0; tri_index(ell, ell) + 1];
    legendre_normalized(ell, theta.cos(), theta.sin(), &mut table);
    let p = table[tri_index(ell, ma)];
    let y = Complex64::from_polar(p, ma as f64 * phi);
    Ok(if m >= 0 {
        y
    } else if ma.is_multiple_of(2) {
        y.conj()
    } else {
        -y.conj()
    })
}
