//! Product-integration weights in time for piecewise-linear histories.
//!
//! Frequency side: `∫_{t_n}^{t_{n+1}} e^{−iω(t_{n+1}−s)} ν(s) ds = α ν_n + β ν_{n+1}`.
//! Lag side: `∫ ρ(τ,ℓ)·hat(τ) dτ` over one lag panel `[p·dt, (p+1)·dt]`.

use core::f64::consts::PI;

use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::kernels::rho_raw;
use crate::quad::adaptive_split;
use crate::specfun::HalfIntOrder;
use crate::tail::ray;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Weights `(α, β)` of `ν_n` and `ν_{n+1}` in
/// `∫_{t_n}^{t_{n+1}} e^{−iω(t_{n+1}−s)} ν(s) ds` for linear `ν`.
pub fn hat_weights(omega: f64, dt: f64) -> (Complex64, Complex64) {
    let theta = omega * dt;
    let a = -I * theta;
    let (p1, p2) = if theta.abs() < 0.5 {
        // φ₁ = Σ aᵏ/(k+1)!, φ₂ = Σ aᵏ/(k!(k+2)).
        let mut p1 = Complex64::new(0.0, 0.0);
        let mut p2 = Complex64::new(0.0, 0.0);
        let mut pow = Complex64::new(1.0, 0.0);
        let mut fact = 1.0;
        for k in 0..24 {
            let kf = k as f64;
            p1 += pow / (fact * (kf + 1.0));
            p2 += pow / (fact * (kf + 2.0));
            pow *= a;
            fact *= kf + 1.0;
        }
        (p1, p2)
    } else {
        let e = a.exp();
        let p1 = (e - 1.0) / a;
        (p1, e / a - (e - 1.0) / (a * a))
    };
    (p2 * dt, (p1 - p2) * dt)
}

fn amplitudes(ell: usize) -> Vec<f64> {
    let mut a = Vec::with_capacity(ell + 1);
    let mut c = 1.0f64;
    for k in 0..=ell {
        a.push(c);
        c *= ((ell + k + 1) * (ell - k)) as f64 / (k + 1) as f64;
    }
    a
}

/// Split point of the first lag panel below which the kernel is handled by
/// its two-term Hankel decomposition.
pub fn singular_split(ell: usize, dt: f64) -> f64 {
    let l2 = ((ell * ell) as f64).max(50.0);
    dt.min(0.5 / l2)
}

/// `∫₀^{τs} ρ(τ,ℓ)·(1 − τ/dt, τ/dt) dτ` from
/// `ρ = A(τ) + B(τ)`, `A = e^{−iπ/4}(2√(πτ))^{−1} Σ (−i)^k a_k τ^k` integrated in
/// closed form and `B = (−1)^ℓ e^{−5iπ/4} e^{i/τ}(2√(πτ))^{−1} Σ i^k a_k τ^k`
/// integrated in `u = 1/τ` along `u = 1/τs + iy`.
fn singular_panel(ell: usize, dt: f64, ts: f64, tol: f64) -> Result<(Complex64, Complex64)> {
    let a = amplitudes(ell);
    let pref = 1.0 / (2.0 * PI.sqrt());
    let ca = Complex64::from_polar(pref, -PI / 4.0);
    let sign = if ell.is_multiple_of(2) { 1.0 } else { -1.0 };
    let cb = Complex64::from_polar(pref * sign, -5.0 * PI / 4.0);

    let mut near = Complex64::new(0.0, 0.0);
    let mut far = Complex64::new(0.0, 0.0);
    let mut ik = Complex64::new(1.0, 0.0);
    for (k, &ak) in a.iter().enumerate() {
        let kf = k as f64;
        let m0 = ts.powf(kf + 0.5) / (kf + 0.5);
        let m1 = ts.powf(kf + 1.5) / ((kf + 1.5) * dt);
        near += ik.conj() * ak * (m0 - m1);
        far += ik.conj() * ak * m1;
        ik *= I;
    }
    near *= ca;
    far *= ca;

    let series = move |u: Complex64| {
        let inv = 1.0 / u;
        let mut s = Complex64::new(0.0, 0.0);
        let mut p = Complex64::new(1.0, 0.0);
        let mut ik = Complex64::new(1.0, 0.0);
        for &ak in &a {
            s += ik * p * ak;
            p *= inv;
            ik *= I;
        }
        (I * u).exp() * s * u.powf(-1.5)
    };
    let u0 = Complex64::new(1.0 / ts, 0.0);
    let bn = ray(
        &|u: Complex64| series(u) * (1.0 - 1.0 / (u * dt)),
        u0,
        I,
        1.0,
        tol,
    )?;
    let bf = ray(&|u: Complex64| series(u) / (u * dt), u0, I, 1.0, tol)?;
    Ok((near + cb * bn, far + cb * bf))
}

/// `(∫ ρ(τ,ℓ)(1−u) dτ, ∫ ρ(τ,ℓ) u dτ)` over `τ ∈ [p·dt, (p+1)·dt]`,
/// `u = τ/dt − p`. The first weight multiplies `ν` at the panel end nearer to
/// the evaluation time.
pub fn lag_panel_weights(
    ell: usize,
    dt: f64,
    p: usize,
    tol: f64,
) -> Result<(Complex64, Complex64)> {
    HalfIntOrder::new(ell)?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Precondition("lag weights need dt > 0"));
    }
    let a = p as f64 * dt;
    let b = a + dt;
    let (mut near, mut far, lo) = if p == 0 {
        let ts = singular_split(ell, dt);
        let (n, f) = singular_panel(ell, dt, ts, tol * 0.1)?;
        (n, f, ts)
    } else {
        (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), a)
    };
    if lo < b {
        // Equal phase increments of 1/(2τ) per piece.
        let (u0, u1) = (1.0 / lo, 1.0 / b);
        let pieces = (((u0 - u1) / (2.0 * PI)).ceil() as usize).clamp(1, 1 << 16);
        let breaks: Vec<f64> = (0..=pieces)
            .map(|i| {
                if i == pieces {
                    b
                } else {
                    1.0 / (u0 - (u0 - u1) * i as f64 / pieces as f64)
                }
            })
            .collect();
        let ptol = tol * 0.45;
        near += adaptive_split(
            |t: f64| rho_raw(t, ell) * (1.0 - (t - a) / dt),
            &breaks,
            ptol,
            1e-13,
            4000,
        )?
        .value;
        far += adaptive_split(
            |t: f64| rho_raw(t, ell) * ((t - a) / dt),
            &breaks,
            ptol,
            1e-13,
            4000,
        )?
        .value;
    }
    Ok((near, far))
}

/// Weights of every lag panel `p = 0..n_panels` for one `ℓ`, interleaved as
/// `[near₀, far₀, near₁, far₁, …]`.
pub fn lag_weight_table(
    ell: usize,
    dt: f64,
    n_panels: usize,
    tol: f64,
    out: &mut [Complex64],
) -> Result<()> {
    if out.len() != 2 * n_panels {
        return Err(Error::GridMismatch {
            expected: 2 * n_panels,
            found: out.len(),
        });
    }
    for p in 0..n_panels {
        let (n, f) = lag_panel_weights(ell, dt, p, tol)?;
        out[2 * p] = n;
        out[2 * p + 1] = f;
    }
    Ok(())
}

/// `∫₀^{t_n} ρ(t_n − s, ℓ) ν(s) ds` for the piecewise-linear interpolant of
/// samples `hist[i] = ν(i·dt)`, `t_n = (hist.len() − 1)·dt`.
pub fn apply_lambda_direct(hist: &[Complex64], dt: f64, ell: usize, tol: f64) -> Result<Complex64> {
    let n = hist.len().saturating_sub(1);
    let mut s = Complex64::new(0.0, 0.0);
    for p in 0..n {
        let (w_near, w_far) = lag_panel_weights(ell, dt, p, tol / n as f64)?;
        s += w_near * hist[n - p] + w_far * hist[n - p - 1];
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hat_weights_match_quadrature() {
        for &(omega, dt) in &[(0.0, 0.1), (3.0, 0.1), (5.0, 0.1), (4e4, 1e-3), (1e-3, 1.0)] {
            let (al, be) = hat_weights(omega, dt);
            let wa = adaptive(
                |s: f64| Complex64::from_polar((dt - s) / dt, -omega * (dt - s)),
                0.0,
                dt,
                1e-15,
                1e-14,
                1000,
            )
            .unwrap()
            .value;
            let wb = adaptive(
                |s: f64| Complex64::from_polar(s / dt, -omega * (dt - s)),
                0.0,
                dt,
                1e-15,
                1e-14,
                1000,
            )
            .unwrap()
            .value;
            assert!((al - wa).norm() < 1e-14 * dt.max(1.0), "{omega} {al} {wa}");
            assert!((be - wb).norm() < 1e-14 * dt.max(1.0), "{omega} {be} {wb}");
        }
    }

    #[test]
    fn hat_weights_integrate_exponential_history_exactly_for_linear() {
        // Sum of weights reproduces the constant history exactly.
        let (al, be) = hat_weights(7.0, 0.3);
        let want = (1.0 - Complex64::from_polar(1.0, -2.1)) / (c(0.0, 7.0));
        assert!((al + be - want).norm() < 1e-15);
    }

    #[test]
    fn accumulator_recursion_is_exact_for_linear_history() {
        // H̄(t) = ∫₀ᵗ e^{−iω(t−s)}(1+2s) ds
        //      = (1+2t)(1−e^{−at})/a − 2(1 − e^{−at}(1+at))/a², a = iω.
        let (omega, dt) = (37.0, 0.01);
        let (al, be) = hat_weights(omega, dt);
        let e = Complex64::from_polar(1.0, -omega * dt);
        let nu = |s: f64| c(1.0 + 2.0 * s, 0.0);
        let mut h = c(0.0, 0.0);
        for n in 0..100 {
            let t0 = n as f64 * dt;
            h = e * h + al * nu(t0) + be * nu(t0 + dt);
        }
        let t = 1.0;
        let a = c(0.0, omega);
        let ex = (-a * t).exp();
        let want = (1.0 + 2.0 * t) * (1.0 - ex) / a - 2.0 * (1.0 - ex * (1.0 + a * t)) / (a * a);
        assert!((h - want).norm() < 1e-12, "{h} {want}");
    }

    #[test]
    fn singular_split_is_consistent() {
        // Moving the split point must not change the panel weights.
        for ell in [0usize, 1, 3] {
            let dt = 2e-3;
            let (n0, f0) = singular_panel(ell, dt, dt, 1e-14).unwrap();
            let ts = 4e-4;
            let (n1, f1) = singular_panel(ell, dt, ts, 1e-14).unwrap();
            let u0 = 1.0 / ts;
            let u1 = 1.0 / dt;
            let pieces = ((u0 - u1) / (2.0 * PI)).ceil() as usize;
            let breaks: Vec<f64> = (0..=pieces)
                .map(|i| 1.0 / (u0 - (u0 - u1) * i as f64 / pieces as f64))
                .collect();
            let rn = adaptive_split(
                |t: f64| rho_raw(t, ell) * (1.0 - t / dt),
                &breaks,
                1e-14,
                1e-13,
                4000,
            )
            .unwrap()
            .value;
            let rf = adaptive_split(
                |t: f64| rho_raw(t, ell) * (t / dt),
                &breaks,
                1e-14,
                1e-13,
                4000,
            )
            .unwrap()
            .value;
            assert!((n0 - n1 - rn).norm() < 1e-12, "ell={ell} {n0} {}", n1 + rn);
            assert!((f0 - f1 - rf).norm() < 1e-12, "ell={ell} {f0} {}", f1 + rf);
        }
    }

    #[test]
    fn constant_history_matches_scalar_oracle() {
        // ∫₀^{1/2} ρ(τ,0) dτ with ρ = (−i)^{3/2} e^{ix} sin x √(2x/π), x = 1/(2τ):
        // (−i)^{3/2}/√(2π) ∫₁^∞ (e^{2ix} − 1)/(2i) x^{−3/2} dx.
        let dt = 0.01;
        let hist = alloc::vec![c(1.0, 0.0); 51];
        let got = apply_lambda_direct(&hist, dt, 0, 1e-11).unwrap();
        let osc = ray(
            &|z: Complex64| (2.0 * I * z).exp() * z.powf(-1.5),
            c(1.0, 0.0),
            I,
            1.0,
            1e-14,
        )
        .unwrap();
        let inner = (osc - 2.0) / (2.0 * I);
        let want = Complex64::from_polar(1.0, -0.75 * PI) / (2.0 * PI).sqrt() * inner;
        assert!((got - want).norm() < 1e-8, "{got} {want}");
    }
}
