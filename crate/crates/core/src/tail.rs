//! Exact high-frequency tails `∫_K^∞ k J²_{ℓ+1/2}(k) g(k) e^{−ik²τ} dk`.
//!
//! Writing `J = (H⁽¹⁾ + H⁽²⁾)/2` with the terminating Hankel amplitudes gives
//! `k J² = (1/2π)[(−1)^{ℓ+1} e^{2ik} S² + 2 S S̃ + (−1)^{ℓ+1} e^{−2ik} S̃²]`.
//! Each piece is integrated along its own steepest-descent-type contour, so
//! no oscillatory integral is ever done on the real axis. `g` must be
//! analytic for `Re k ≥ K` and decay when `τ = 0`.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::quad::adaptive;
use crate::specfun::hankel_amplitudes;

const I: Complex64 = Complex64::new(0.0, 1.0);
const MAX_PANELS: usize = 4000;
// e^{−EXP_CUT} is treated as zero.
const EXP_CUT: f64 = 42.0;

fn segment<F>(f: &F, z0: Complex64, dir: Complex64, y0: f64, y1: f64, tol: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    if y1 <= y0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let est = adaptive(
        |y: f64| f(z0 + dir * y) * dir,
        y0,
        y1,
        tol,
        1e-13,
        MAX_PANELS,
    )?;
    Ok(est.value)
}

/// Integral along `z0 + dir·y`, `y ∈ [0, ∞)`, by geometrically growing chunks
/// until two consecutive chunks fall below `tol/100`.
pub(crate) fn ray<F>(f: &F, z0: Complex64, dir: Complex64, h0: f64, tol: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    let mut total = Complex64::new(0.0, 0.0);
    let (mut a, mut h) = (0.0, h0);
    let mut quiet = 0;
    for _ in 0..200 {
        let part = segment(f, z0, dir, a, a + h, tol * 1e-2)?;
        total += part;
        if part.norm() < tol * 1e-2 {
            quiet += 1;
            if quiet >= 2 {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
        a += h;
        h *= 2.0;
    }
    Err(Error::Convergence {
        estimate: f64::INFINITY,
        tolerance: tol,
    })
}

/// `∫_K^∞ k J²_{ℓ+1/2}(k) g(k) e^{−ik²τ} dk` for `τ ≥ 0`, `K > 0`.
pub fn tail_integral<G>(ell: usize, cut: f64, tau: f64, g: G, tol: f64) -> Result<Complex64>
where
    G: Fn(Complex64) -> Complex64,
{
    if !(cut > 0.0) || !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::Precondition("tail needs K > 0 and finite τ ≥ 0"));
    }
    let sign = if ell.is_multiple_of(2) { -1.0 } else { 1.0 };
    let k0 = Complex64::new(cut, 0.0);
    let phase = |z: Complex64| (-I * tau * z * z).exp();
    let plus = |z: Complex64| {
        let (s, _) = hankel_amplitudes(ell, z);
        (2.0 * I * z - I * tau * z * z).exp() * s * s * g(z)
    };
    let minus = |z: Complex64| {
        let (_, st) = hankel_amplitudes(ell, z);
        (-2.0 * I * z - I * tau * z * z).exp() * st * st * g(z)
    };
    let cross = |z: Complex64| {
        let (s, st) = hankel_amplitudes(ell, z);
        s * st * g(z) * phase(z)
    };
    let diag = Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2);
    let t = tol / 3.0;

    let (p_plus, p_minus, p_cross);
    if tau == 0.0 {
        p_plus = ray(&plus, k0, I, 1.0, t)?;
        p_minus = ray(&minus, k0, -I, 1.0, t)?;
        // k = K/u maps [K, ∞) onto (0, 1].
        let mapped = |u: f64| {
            if u == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let z = Complex64::new(cut / u, 0.0);
            cross(z) * (cut / (u * u))
        };
        p_cross = adaptive(mapped, 0.0, 1.0, t, 1e-13, MAX_PANELS)?.value;
    } else {
        let h0 = (1.0 / (tau * cut + 1.0)).min(1.0 / tau.sqrt()).min(1.0);
        p_minus = ray(&minus, k0, diag, h0, t)?;
        p_cross = ray(
            &cross,
            k0,
            diag,
            h0.max(1e-3 / (tau * cut)).min(1.0 / tau.sqrt()),
            t,
        )?;
        let saddle = 1.0 / tau;
        if cut >= saddle {
            p_plus = ray(&plus, k0, diag, h0, t)?;
        } else {
            let height = saddle - cut;
            let decay = 2.0 * (1.0 - tau * cut);
            let vertical_end = height.min(EXP_CUT / decay);
            let up = segment(&plus, k0, I, 0.0, vertical_end, t / 2.0)?;
            let width = (EXP_CUT / tau).sqrt();
            let s0 = (-(2.0f64).sqrt() * height).max(-width);
            let ks = Complex64::new(saddle, 0.0);
            let across = segment(&plus, ks, diag, s0, width, t / 2.0)?;
            p_plus = up + across;
        }
    }
    Ok((p_plus * sign + p_cross * 2.0 + p_minus * sign) / (2.0 * PI))
}

/// `∫_K^∞ J²_{ℓ+1/2}(k)/k^p dk` for `p > 0`.
pub fn inverse_power_tail(ell: usize, cut: f64, p: f64, tol: f64) -> Result<f64> {
    let v = tail_integral(ell, cut, 0.0, |z| z.powf(-(p + 1.0)), tol)?;
    Ok(v.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive_split;
    use crate::specfun::j_half_unchecked;
    use alloc::vec::Vec;

    // Real-axis reference for a decaying g on [K, K2] plus the far tail.
    fn direct(ell: usize, cut: f64, upper: f64, tau: f64, g: impl Fn(f64) -> f64) -> Complex64 {
        let n = ((upper - cut) / 0.05).ceil() as usize;
        let breaks: Vec<f64> = (0..=n)
            .map(|i| cut + (upper - cut) * i as f64 / n as f64)
            .collect();
        adaptive_split(
            |k: f64| {
                let j = j_half_unchecked(ell, k);
                Complex64::from_polar(k * j * j * g(k), -tau * k * k)
            },
            &breaks,
            1e-12,
            0.0,
            100000,
        )
        .unwrap()
        .value
    }

    #[test]
    fn static_inverse_powers() {
        // ∫_K^∞ J²/k³ over [K, 400] plus tail bound ~ 1/(π·4·400⁴).
        for ell in [0usize, 3, 7] {
            let cut = 60.0;
            let got = inverse_power_tail(ell, cut, 3.0, 1e-14).unwrap();
            let body = direct(ell, cut, 400.0, 0.0, |k| 1.0 / k.powi(4)).re;
            let far = 1.0 / (PI * 3.0 * 400f64.powi(3));
            assert!((got - body - far).abs() < 1e-10, "ell={ell} {got} {body}");
        }
    }

    #[test]
    fn oscillatory_with_decaying_weight() {
        for &(ell, tau) in &[(0usize, 0.3), (2, 0.01), (5, 0.002)] {
            let cut = 50.0;
            let lam = 2.0;
            let got = tail_integral(ell, cut, tau, |z| 1.0 / (z * z + lam), 1e-13).unwrap();
            // The tail beyond 3000 is bounded by ~1/(τ·3000²·...) and negligible here.
            let want = direct(ell, cut, 3000.0, tau, |k| 1.0 / (k * k + lam));
            assert!(
                (got - want).norm() < 2e-8,
                "ell={ell} tau={tau} {got} {want}"
            );
        }
    }

    #[test]
    fn saddle_beyond_cut_for_pure_kernel() {
        // With g = 1 the tail contains the stationary point k = 1/τ.
        let ell = 1;
        let cut = 20.0;
        let tau = 0.02;
        let got = tail_integral(ell, cut, tau, |_| Complex64::new(1.0, 0.0), 1e-12).unwrap();
        // Full integral from closed form minus a real-axis body on [0, K].
        let x = 1.0 / (2.0 * tau);
        let rho = Complex64::from_polar(
            j_half_unchecked(ell, x) / (2.0 * tau),
            -PI / 2.0 * (ell as f64 + 1.5) + x,
        );
        let body = direct(ell, 1e-9, cut, tau, |_| 1.0);
        assert!(
            (body + got - rho).norm() < 1e-9,
            "{} vs {}",
            body + got,
            rho
        );
    }
}
