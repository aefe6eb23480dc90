//! Scalar kernels: the sphere symbol `ρ(τ,ℓ)`, its conjugate `O_ℓ(τ)`, the
//! resolvent trace `T^λ_ℓ`, the source functions `f₂`, `g₂`, the dispersive
//! exponent `δ(p)`, and the frequency-grid representation of `ρ` used by the
//! fast propagator.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::hankel::RadialGrid;
use crate::quad::{adaptive_split, richardson};
use crate::specfun::{bessel_ik_product_half, bessel_j_half_all, j_half_unchecked, HalfIntOrder};
use crate::tail::tail_integral;

/// Empirical cap on `x^{1/3}|J_{ℓ+1/2}(x)|`.
pub const LANDAU_X_CAP: f64 = 0.786;
/// Empirical cap on `(ℓ+1/2)^{1/3}|J_{ℓ+1/2}(x)|`.
pub const LANDAU_NU_CAP: f64 = 0.675;

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(domain("tau", tau, "must be positive and finite"));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(domain("lambda", lambda, "must be positive and finite"));
    }
    Ok(())
}

/// `(−i)^{ℓ+3/2}` from exact quarter turns and `e^{−3iπ/4}`.
fn phase_minus_i(ell: usize) -> Complex64 {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    let q = match ell % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    };
    q * Complex64::new(-h, -h)
}

// (−i)^{ℓ+3/2} e^{i/(2τ)} J(1/(2τ))/(2τ), no order cap.
pub(crate) fn rho_raw(tau: f64, ell: usize) -> Complex64 {
    let x = 0.5 / tau;
    phase_minus_i(ell) * Complex64::from_polar(1.0, x) * (j_half_unchecked(ell, x) * x)
}

/// Symbol of the sphere-restricted free propagator on degree `ℓ`:
/// `(−i)^{ℓ+3/2} e^{i/(2τ)} J_{ℓ+1/2}(1/(2τ)) / (2τ)`.
pub fn rho_symbol(tau: f64, ell: usize) -> Result<Complex64> {
    check_tau(tau)?;
    HalfIntOrder::new(ell)?;
    Ok(rho_raw(tau, ell))
}

/// `O_ℓ(τ) = ∫₀^∞ k J²_{ℓ+1/2}(k) e^{ik²τ} dk` in closed form:
/// `e^{i(ℓ+3/2)π/2} e^{−i/(2τ)} J_{ℓ+1/2}(1/(2τ)) / (2τ)`.
pub fn o_ell(tau: f64, ell: usize) -> Result<Complex64> {
    check_tau(tau)?;
    HalfIntOrder::new(ell)?;
    let x = 0.5 / tau;
    Ok(phase_minus_i(ell).conj() * Complex64::from_polar(1.0, -x) * (j_half_unchecked(ell, x) * x))
}

/// Damped quadrature of `∫₀^∞ k J² e^{ik²τ} e^{−εk²} dk` at three dampings
/// `ε₀, ε₀/10, ε₀/100`, extrapolated to `ε = 0`.
///
/// `ε₀ = min(eps, 0.4τ²)`: the damped integral is analytic in `ε − iτ` with
/// derivatives growing like `τ^{−2}`, so larger dampings do not extrapolate.
/// Fails with [`Error::Convergence`] when dropping the largest damping moves
/// the extrapolated value by more than `tol`.
pub fn o_ell_bruteforce(tau: f64, ell: usize, eps: f64, tol: f64) -> Result<Complex64> {
    check_tau(tau)?;
    HalfIntOrder::new(ell)?;
    if !(eps > 0.0) {
        return Err(domain("eps", eps, "damping must be positive"));
    }
    let e0 = eps.min(0.4 * tau * tau);
    let hs = [e0, e0 * 0.1, e0 * 0.01];
    let mut vs = [Complex64::new(0.0, 0.0); 3];
    for (v, &e) in vs.iter_mut().zip(&hs) {
        *v = damped_o_ell(tau, ell, e, tol * 1e-2)?;
    }
    let (value, err) = richardson(&hs, &vs);
    if !(err <= tol) {
        return Err(Error::Convergence {
            estimate: err,
            tolerance: tol,
        });
    }
    Ok(value)
}

/// `½∫₀^{37/ε} J²(√ω) e^{(iτ−ε)ω} dω`, one panel per period of `e^{iτω}`.
fn damped_o_ell(tau: f64, ell: usize, eps: f64, tol: f64) -> Result<Complex64> {
    let top = 37.0 / eps;
    let period = 2.0 * PI / tau;
    let n = (top / period).ceil().max(1.0) as usize;
    let mut breaks = Vec::with_capacity(n + 1);
    for i in 0..=n {
        breaks.push((i as f64 * period).min(top));
    }
    breaks.dedup();
    let est = adaptive_split(
        |w: f64| {
            if w == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let j = j_half_unchecked(ell, w.sqrt());
            Complex64::from_polar(0.5 * j * j * (-eps * w).exp(), tau * w)
        },
        &breaks,
        tol,
        0.0,
        200,
    )?;
    Ok(est.value)
}

/// `T^λ_ℓ = ∫₀^∞ k J²_{ℓ+1/2}(k)/(k²+λ) dk = I_{ℓ+1/2}(√λ) K_{ℓ+1/2}(√λ)`.
pub fn t_lambda(ell: usize, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    bessel_ik_product_half(HalfIntOrder::new(ell)?, lambda.sqrt())
}

/// Cut between the real-axis body and the contour tail in the quadrature
/// oracles; large enough for the Hankel sums to be well conditioned.
fn oracle_cut(ell: usize) -> f64 {
    (30.0f64)
        .max((ell * ell) as f64)
        .max(4.0 * ell as f64 + 10.0)
}

fn body_breaks(cut: f64, t: f64) -> Vec<f64> {
    let width = (0.5f64).min(PI / (4.0 * t * cut + 1e-300)).max(1e-3);
    let n = (cut / width).ceil() as usize;
    (0..=n).map(|i| cut * i as f64 / n as f64).collect()
}

/// `∫₀^∞ k J² e^{−itk²} g(k) dk`: real-axis body on `[0, K]` plus the exact
/// contour tail.
fn full_integral<G>(ell: usize, t: f64, g: G, tol: f64) -> Result<Complex64>
where
    G: Fn(Complex64) -> Complex64,
{
    let cut = oracle_cut(ell);
    let body = adaptive_split(
        |k: f64| {
            if k == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let j = j_half_unchecked(ell, k);
            Complex64::from_polar(k * j * j, -t * k * k) * g(Complex64::new(k, 0.0))
        },
        &body_breaks(cut, t),
        tol * 0.5,
        0.0,
        400,
    )?;
    Ok(body.value + tail_integral(ell, cut, t, g, tol * 0.5)?)
}

/// Quadrature of the defining integral of `T^λ_ℓ`; the independent oracle for
/// [`t_lambda`].
pub fn t_lambda_quadrature(ell: usize, lambda: f64, tol: f64) -> Result<f64> {
    check_lambda(lambda)?;
    HalfIntOrder::new(ell)?;
    let v = full_integral(ell, 0.0, |z| 1.0 / (z * z + lambda), tol)?;
    Ok(v.re)
}

/// `f₂(t) = ∫₀^∞ r e^{−itr²} J²_{ℓ+1/2}(r)/(r²+λ) dr`; `f₂(0) = T^λ_ℓ`.
pub fn f2(t: f64, ell: usize, lambda: f64, tol: f64) -> Result<Complex64> {
    check_lambda(lambda)?;
    HalfIntOrder::new(ell)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(domain("t", t, "must be non-negative and finite"));
    }
    if t == 0.0 {
        return Ok(Complex64::new(t_lambda(ell, lambda)?, 0.0));
    }
    full_integral(ell, t, |z| 1.0 / (z * z + lambda), tol)
}

/// `g₂(t) = −λ ∫₀^∞ J²_{ℓ+1/2}(r)/(r(r²+λ)) (e^{−itr²} − 1) dr`; `g₂(0) = 0`.
pub fn g2(t: f64, ell: usize, lambda: f64, tol: f64) -> Result<Complex64> {
    check_lambda(lambda)?;
    HalfIntOrder::new(ell)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(domain("t", t, "must be non-negative and finite"));
    }
    if t == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let w = |z: Complex64| 1.0 / (z * z * (z * z + lambda));
    let moving = full_integral(ell, t, w, tol * 0.5)?;
    let fixed = full_integral(ell, 0.0, w, tol * 0.5)?;
    Ok(-(moving - fixed) * lambda)
}

/// `δ(p) = 5/(3p) − 1/6` for `p ∈ [1, 2]`.
pub fn delta_exponent(p: f64) -> Result<f64> {
    if !(1.0..=2.0).contains(&p) {
        return Err(domain("p", p, "must lie in [1, 2]"));
    }
    Ok(5.0 / (3.0 * p) - 1.0 / 6.0)
}

/// Lag of the `n`-th sharpness sample,
/// `t_n = 1/(2(n + 1/2 + (n + 1/2)^{1/3}))`.
pub fn sharpness_time(n: usize) -> f64 {
    let a = n as f64 + 0.5;
    0.5 / (a + a.cbrt())
}

/// `t_n^{2/3} · sup_{ℓ ≤ 2n} |ρ(t_n, ℓ)|`.
pub fn sharpness_quantity(n: usize) -> f64 {
    let t = sharpness_time(n);
    let x = 0.5 / t;
    let lmax = 2 * n;
    let mut j = alloc::vec![0.0; lmax + 1];
    bessel_j_half_all(lmax, x, &mut j);
    let sup = j.iter().fold(0.0f64, |m, v| m.max(v.abs())) * x;
    t.powf(2.0 / 3.0) * sup
}

/// Default frequency cutoff for band limit `L`.
pub fn default_k_max(l: usize) -> f64 {
    (200.0f64).max(0.5 * (l * l) as f64)
}

const PANEL_POINTS: usize = 16;
const MAX_NODES: usize = 4_000_000;

/// Composite Gauss–Legendre grid on `[0, K]` whose panels keep the phase of
/// `e^{±2ik − ik²τ}` below `budget` radians for every `τ ≤ horizon`.
pub fn frequency_grid(k_max: f64, horizon: f64, budget: f64) -> Result<RadialGrid> {
    let mut breaks = alloc::vec![0.0];
    let mut k = 0.0;
    while k < k_max {
        let rate = 2.0 + 2.0 * (k + 1.0).min(k_max) * horizon;
        let h = (budget / rate).min(1.0);
        k = (k + h).min(k_max);
        if k_max - k < 1e-9 * k_max {
            k = k_max;
        }
        breaks.push(k);
        if breaks.len() * PANEL_POINTS > MAX_NODES {
            return Err(Error::KernelTolerance {
                target: 0.0,
                achieved: f64::INFINITY,
            });
        }
    }
    RadialGrid::from_breaks(&breaks, PANEL_POINTS)
}

/// Frequency-grid representation of `ρ(·, ℓ)` for `ℓ ≤ L`:
/// `ρ(τ,ℓ) = Σ_j w_j k_j J²_{ℓ+1/2}(k_j) e^{−ik_j²τ} + tail_ℓ(τ)`, the tail
/// being the exact contour integral over `[K, ∞)`.
#[derive(Debug, Clone)]
pub struct KernelQuadrature {
    grid: Arc<RadialGrid>,
    l: usize,
    jsq: Vec<f64>,
    tau_min: f64,
    t_horizon: f64,
    tol: f64,
    certified: f64,
}

impl KernelQuadrature {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn band_limit(&self) -> usize {
        self.l
    }

    pub fn k_max(&self) -> f64 {
        self.grid.k_max()
    }

    /// `J²_{ℓ+1/2}(k_j)` on the grid.
    pub fn jsq(&self, ell: usize) -> &[f64] {
        let n = self.grid.len();
        &self.jsq[ell * n..(ell + 1) * n]
    }

    pub fn tau_min(&self) -> f64 {
        self.tau_min
    }

    pub fn t_horizon(&self) -> f64 {
        self.t_horizon
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Largest deviation from the closed form seen during certification.
    pub fn certified_error(&self) -> f64 {
        self.certified
    }

    /// Grid part `Σ_j w_j k_j J² e^{−ik_j²τ}`.
    pub fn grid_sum(&self, tau: f64, ell: usize) -> Complex64 {
        let g = &*self.grid;
        g.nodes()
            .iter()
            .zip(g.weights())
            .zip(self.jsq(ell))
            .map(|((k, w), j)| Complex64::from_polar(w * k * j, -tau * k * k))
            .sum()
    }

    /// Exact contribution of `[K, ∞)`.
    pub fn tail(&self, tau: f64, ell: usize) -> Result<Complex64> {
        let one = |_| Complex64::new(1.0, 0.0);
        tail_integral(ell, self.k_max(), tau, one, self.tol * 1e-3)
    }

    /// Represented kernel at lag `τ > 0`.
    pub fn eval(&self, tau: f64, ell: usize) -> Result<Complex64> {
        check_tau(tau)?;
        if ell > self.l {
            return Err(Error::BandLimit {
                requested: ell,
                available: self.l,
            });
        }
        Ok(self.grid_sum(tau, ell) + self.tail(tau, ell)?)
    }

    /// Lags used for certification: 24 per decade on `[τ_min, T]`, both ends
    /// included.
    pub fn certification_lags(&self) -> Vec<f64> {
        let decades = (self.t_horizon / self.tau_min).log10();
        let n = ((24.0 * decades).ceil() as usize).max(2);
        (0..=n)
            .map(|i| self.tau_min * (self.t_horizon / self.tau_min).powf(i as f64 / n as f64))
            .collect()
    }

    fn verify(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for tau in self.certification_lags() {
            for ell in 0..=self.l {
                let d = (self.eval(tau, ell)? - rho_raw(tau, ell)).norm();
                worst = worst.max(d);
            }
        }
        Ok(worst)
    }
}

/// Builds and certifies a [`KernelQuadrature`] with the default cutoff.
pub fn build_kernel_quadrature(
    l: usize,
    tau_min: f64,
    t_horizon: f64,
    tol: f64,
) -> Result<KernelQuadrature> {
    build_kernel_quadrature_with(l, tau_min, t_horizon, tol, default_k_max(l))
}

/// Builds and certifies a [`KernelQuadrature`] on `[0, k_max]`, tightening
/// the per-panel phase budget until the verification error is below `tol`.
pub fn build_kernel_quadrature_with(
    l: usize,
    tau_min: f64,
    t_horizon: f64,
    tol: f64,
    k_max: f64,
) -> Result<KernelQuadrature> {
    if !(tau_min > 0.0) || !(tau_min < t_horizon) || !t_horizon.is_finite() {
        return Err(Error::Precondition("need 0 < tau_min < T_horizon"));
    }
    if !(tol > 0.0) {
        return Err(Error::Precondition("kernel tolerance must be positive"));
    }
    if !(k_max > 0.0) {
        return Err(domain("k_max", k_max, "must be positive"));
    }
    HalfIntOrder::new(l)?;
    let mut budget = 20.0;
    let mut achieved = f64::INFINITY;
    for _ in 0..4 {
        let grid = match frequency_grid(k_max, t_horizon, budget) {
            Ok(g) => g,
            Err(_) => break,
        };
        let n = grid.len();
        let mut jsq = alloc::vec![0.0; (l + 1) * n];
        let mut row = alloc::vec![0.0; l + 1];
        for (j, &k) in grid.nodes().iter().enumerate() {
            bessel_j_half_all(l, k, &mut row);
            for ell in 0..=l {
                jsq[ell * n + j] = row[ell] * row[ell];
            }
        }
        let mut kq = KernelQuadrature {
            grid: Arc::new(grid),
            l,
            jsq,
            tau_min,
            t_horizon,
            tol,
            certified: f64::INFINITY,
        };
        achieved = kq.verify()?;
        if achieved <= tol {
            kq.certified = achieved;
            return Ok(kq);
        }
        budget *= 0.5;
    }
    Err(Error::KernelTolerance {
        target: tol,
        achieved,
    })
}
