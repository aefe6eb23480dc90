//! Admissible initial data `ψ₀ = φ₀^λ − G^λ ν(q₀)`: regular part in the
//! Hankel domain, trace on the sphere, and the trace-compatibility fixed
//! point `q₀ + T^λ ν(q₀) = η`.

use core::f64::consts::PI;

use alloc::sync::Arc;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::hankel::{hankel_eval, shell_transform, RadialGrid, RadialSpectrum};
use crate::kernels::t_lambda;
use crate::sphgrid::{
    dealias_band, lm_index, lp_norm, nu_spectrum, sht_synthesis, sobolev_norm, ChargeSpectrum,
    SphereGrid,
};
use crate::tail::tail_integral;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Maximum number of λ doublings in [`solve_trace_compatibility`].
pub const MAX_DOUBLINGS: usize = 20;
/// Relative `H^{3/2}` residual accepted for the trace-compatibility solve.
pub const TRACE_RESIDUAL_TOL: f64 = 1e-10;
const FIXED_POINT_MAX_ITER: usize = 400;

/// `e^{−√λ·d}/(4π d)`.
pub fn green_kernel(x_dist: f64, lambda: f64) -> Result<f64> {
    if !(x_dist > 0.0) || !x_dist.is_finite() {
        return Err(domain("x_dist", x_dist, "must be positive and finite"));
    }
    if !(lambda > 0.0) {
        return Err(domain("lambda", lambda, "must be positive"));
    }
    Ok((-lambda.sqrt() * x_dist).exp() / (4.0 * PI * x_dist))
}

/// Boundary nonlinearity on the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    /// `ν(q) = β|q|^{2σ} q`.
    Power { beta: f64, sigma: f64 },
    /// `ν(q) = α q`.
    Linear { alpha: f64 },
}

impl Coupling {
    pub fn is_zero(&self) -> bool {
        match *self {
            Coupling::Power { beta, .. } => beta == 0.0,
            Coupling::Linear { alpha } => alpha == 0.0,
        }
    }

    pub fn beta(&self) -> f64 {
        match *self {
            Coupling::Power { beta, .. } => beta,
            Coupling::Linear { alpha } => alpha,
        }
    }

    pub fn sigma(&self) -> f64 {
        match *self {
            Coupling::Power { sigma, .. } => sigma,
            Coupling::Linear { .. } => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let (b, s) = (self.beta(), self.sigma());
        if !b.is_finite() {
            return Err(domain("beta", b, "must be finite"));
        }
        if !(s >= 0.0) || !s.is_finite() {
            return Err(domain("sigma", s, "must be finite and non-negative"));
        }
        if let Coupling::Power { sigma, .. } = *self {
            if !(sigma > 0.0) {
                return Err(domain("sigma", sigma, "must be positive"));
            }
        }
        Ok(())
    }
}

/// Spectral evaluation of `ν` at band `L`, pseudo-spectrally on a dealiased
/// grid for the power law.
#[derive(Debug, Clone)]
pub struct Nonlinearity {
    coupling: Coupling,
    l: usize,
    grid: Arc<SphereGrid>,
}

impl Nonlinearity {
    pub fn new(coupling: Coupling, l: usize) -> Result<Self> {
        coupling.validate()?;
        let band = dealias_band(l, coupling.sigma().max(0.5));
        Ok(Self {
            coupling,
            l,
            grid: Arc::new(SphereGrid::new(band)),
        })
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    pub fn band_limit(&self) -> usize {
        self.l
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn apply(&self, q: &ChargeSpectrum) -> Result<ChargeSpectrum> {
        check_band(q, self.l)?;
        match self.coupling {
            Coupling::Linear { alpha } => Ok(q.scale(Complex64::new(alpha, 0.0))),
            Coupling::Power { beta: 0.0, .. } => Ok(ChargeSpectrum::zeros(self.l)),
            Coupling::Power { beta, sigma } => nu_spectrum(q, beta, sigma, &self.grid),
        }
    }

    /// Boundary energy whose conjugate gradient is `ν`:
    /// `β/(σ+1)·‖q‖^{2σ+2}_{L^{2σ+2}}`, or `α‖q‖²` in the linear case.
    pub fn potential(&self, q: &ChargeSpectrum) -> Result<f64> {
        check_band(q, self.l)?;
        let (b, s) = (self.coupling.beta(), self.coupling.sigma());
        if b == 0.0 {
            return Ok(0.0);
        }
        if let Coupling::Linear { alpha } = self.coupling {
            return Ok(alpha * q.coefficients().iter().map(|c| c.norm_sqr()).sum::<f64>());
        }
        let field = sht_synthesis(q, &self.grid)?;
        let p = 2.0 * s + 2.0;
        Ok(b / (s + 1.0) * lp_norm(&field, p)?.powf(p))
    }
}

fn check_band(q: &ChargeSpectrum, l: usize) -> Result<()> {
    if q.band_limit() != l {
        return Err(Error::GridMismatch {
            expected: l,
            found: q.band_limit(),
        });
    }
    Ok(())
}

/// Radial profile `a·r^p·e^{−b(r−c)²}` placed on `√(4π)·Y_{ℓ,m}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialProfile {
    pub ell: usize,
    pub m: i64,
    pub amplitude: Complex64,
    pub rate: f64,
    pub center: f64,
    pub power: u32,
}

impl RadialProfile {
    /// `a·e^{−r²/(2w²)}`-type Gaussian of width `w` centred at `c`.
    pub fn gaussian(ell: usize, m: i64, amplitude: Complex64, width: f64, center: f64) -> Self {
        Self {
            ell,
            m,
            amplitude,
            rate: 1.0 / (2.0 * width * width),
            center,
            power: 0,
        }
    }

    pub fn value(&self, r: f64) -> Complex64 {
        let d = r - self.center;
        self.amplitude * (r.powi(self.power as i32) * (-self.rate * d * d).exp())
    }

    /// Frequency beyond which the transform is below `e^{−45}` of its scale.
    pub fn k_cut(&self) -> f64 {
        2.0 * (45.0 * self.rate).sqrt() + 2.0 + self.power as f64
    }

    fn validate(&self, l: usize, r_max: f64) -> Result<()> {
        if self.ell > l {
            return Err(Error::BandLimit {
                requested: self.ell,
                available: l,
            });
        }
        if self.m.unsigned_abs() as usize > self.ell {
            return Err(Error::Index {
                ell: self.ell,
                m: self.m,
            });
        }
        if !(self.rate > 0.0) || !self.rate.is_finite() {
            return Err(domain("rate", self.rate, "must be positive and finite"));
        }
        if !self.center.is_finite() || !self.amplitude.norm().is_finite() {
            return Err(Error::Precondition("profile parameters must be finite"));
        }
        let reach = self.center.max(0.0) + ((50.0 + self.power as f64 * 4.0) / self.rate).sqrt();
        if reach > r_max {
            return Err(domain(
                "width",
                reach,
                "profile does not decay inside the radial grid",
            ));
        }
        Ok(())
    }
}

/// Outer radius of the radial quadrature used for profile transforms.
pub const PROFILE_R_MAX: f64 = 40.0;

/// Hankel representation of `Σ profiles` on `k_grid`; each profile's
/// transform is evaluated up to its [`RadialProfile::k_cut`] and set to zero
/// beyond.
pub fn regular_part(
    profiles: &[RadialProfile],
    l: usize,
    k_grid: Arc<RadialGrid>,
) -> Result<RadialSpectrum> {
    let mut out = RadialSpectrum::zeros(l, k_grid.clone());
    if profiles.is_empty() {
        return Ok(out);
    }
    let r_grid = RadialGrid::default_r(PROFILE_R_MAX)?;
    let norm = (4.0 * PI).sqrt();
    for p in profiles {
        p.validate(l, PROFILE_R_MAX)?;
        let samples: Vec<Complex64> = r_grid.nodes().iter().map(|&r| p.value(r) * norm).collect();
        let k_cut = p.k_cut();
        let n_cut = k_grid.nodes().partition_point(|&k| k <= k_cut);
        let vals = hankel_eval(&samples, &r_grid, p.ell, &k_grid.nodes()[..n_cut])?;
        for (dst, v) in out.mode_mut(p.ell, p.m).iter_mut().zip(vals) {
            *dst += v;
        }
    }
    Ok(out)
}

/// Trace on the unit sphere of a Hankel-domain field:
/// `Σ_j w_j k_j² shell(ℓ,k_j) f̃_{ℓ,m}(k_j)` (no `i^ℓ` phase, matching the
/// phase-free storage of [`RadialSpectrum`]).
pub fn trace_of(spec: &RadialSpectrum) -> Result<ChargeSpectrum> {
    let l = spec.band_limit();
    let grid = spec.grid();
    let mut out = ChargeSpectrum::zeros(l);
    for ell in 0..=l {
        let w: Vec<f64> = grid
            .nodes()
            .iter()
            .zip(grid.weights())
            .map(|(&k, &w)| Ok(w * k * k * shell_transform(ell, k)?))
            .collect::<Result<_>>()?;
        for m in -(ell as i64)..=ell as i64 {
            let s: Complex64 = spec.mode(ell, m).iter().zip(&w).map(|(f, w)| f * w).sum();
            out.coefficients_mut()[lm_index(ell, m)] = s;
        }
    }
    Ok(out)
}

/// Per-mode Hankel profile `shell(ℓ,k)/(k²+λ)` of the Green potential of a
/// surface density.
#[derive(Debug, Clone)]
pub struct GreenShell {
    lambda: f64,
    l: usize,
    grid: Arc<RadialGrid>,
    profiles: Vec<f64>,
}

impl GreenShell {
    pub fn new(l: usize, lambda: f64, grid: Arc<RadialGrid>) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(domain("lambda", lambda, "must be positive and finite"));
        }
        let mut profiles = Vec::with_capacity((l + 1) * grid.len());
        for ell in 0..=l {
            for &k in grid.nodes() {
                profiles.push(shell_transform(ell, k)? / (k * k + lambda));
            }
        }
        Ok(Self {
            lambda,
            l,
            grid,
            profiles,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn profile(&self, ell: usize) -> &[f64] {
        let n = self.grid.len();
        &self.profiles[ell * n..(ell + 1) * n]
    }

    /// `G^λ h` in the Hankel domain.
    pub fn potential(&self, h: &ChargeSpectrum) -> Result<RadialSpectrum> {
        check_band(h, self.l)?;
        let mut out = RadialSpectrum::zeros(self.l, self.grid.clone());
        for (ell, m, c) in h.iter() {
            if c == ZERO {
                continue;
            }
            let prof = self.profile(ell);
            for (dst, p) in out.mode_mut(ell, m).iter_mut().zip(prof) {
                *dst = c * p;
            }
        }
        Ok(out)
    }

    /// Trace of `G^λ Y_{ℓ,m}` back on the sphere: grid sum plus the exact
    /// tail beyond the grid.
    pub fn trace(&self, ell: usize) -> Result<f64> {
        let g = &*self.grid;
        let body: f64 = g
            .nodes()
            .iter()
            .zip(g.weights())
            .zip(self.profile(ell))
            .map(|((&k, &w), &p)| w * k * k * p * shell_transform(ell, k).unwrap_or(0.0))
            .sum();
        let lam = self.lambda;
        let tail = tail_integral(ell, g.k_max(), 0.0, |z| 1.0 / (z * z + lam), 1e-14)?;
        Ok(body + tail.re)
    }
}

/// Outcome of the trace-compatibility solve.
#[derive(Debug, Clone)]
pub struct TraceSolution {
    pub q0: ChargeSpectrum,
    pub lambda: f64,
    pub iterations: usize,
    /// `‖q₀ + T^λν(q₀) − η‖_{H^{3/2}} / ‖η‖_{H^{3/2}}`.
    pub residual: f64,
}

fn apply_t(nu: &ChargeSpectrum, t: &[f64]) -> ChargeSpectrum {
    let mut out = nu.clone();
    for ell in 0..=nu.band_limit() {
        for m in -(ell as i64)..=ell as i64 {
            out.coefficients_mut()[lm_index(ell, m)] *= t[ell];
        }
    }
    out
}

fn combine(a: &ChargeSpectrum, b: &ChargeSpectrum, sb: f64) -> ChargeSpectrum {
    let mut out = a.clone();
    for (x, y) in out.coefficients_mut().iter_mut().zip(b.coefficients()) {
        *x += y * sb;
    }
    out
}

fn h32(q: &ChargeSpectrum) -> f64 {
    sobolev_norm(q, 1.5)
}

/// Solves `q + T^λ ν(q) = η`, doubling `λ` (at most [`MAX_DOUBLINGS`] times)
/// until the fixed-point map contracts, the residual is below
/// [`TRACE_RESIDUAL_TOL`] and `‖q‖_{H^{3/2}} ≤ 2‖η‖_{H^{3/2}}`.
pub fn solve_trace_compatibility(
    eta: &ChargeSpectrum,
    coupling: Coupling,
    lambda0: f64,
) -> Result<TraceSolution> {
    if !(lambda0 > 0.0) || !lambda0.is_finite() {
        return Err(domain("lambda0", lambda0, "must be positive and finite"));
    }
    let l = eta.band_limit();
    let eta_n = h32(eta);
    if coupling.is_zero() || eta_n == 0.0 {
        coupling.validate()?;
        return Ok(TraceSolution {
            q0: eta.clone(),
            lambda: lambda0,
            iterations: 1,
            residual: 0.0,
        });
    }
    let nl = Nonlinearity::new(coupling, l)?;
    let mut lambda = lambda0;
    for _ in 0..=MAX_DOUBLINGS {
        let t: Vec<f64> = (0..=l)
            .map(|ell| t_lambda(ell, lambda))
            .collect::<Result<_>>()?;
        let attempt = match coupling {
            Coupling::Linear { alpha } => linear_solve(eta, alpha, &t),
            Coupling::Power { .. } => power_iterate(eta, &nl, &t, eta_n)?,
        };
        if let Some((q, iterations)) = attempt {
            let nu = nl.apply(&q)?;
            let res = combine(&combine(&q, &apply_t(&nu, &t), 1.0), eta, -1.0);
            let residual = h32(&res) / eta_n;
            let bounded = matches!(coupling, Coupling::Linear { .. }) || h32(&q) <= 2.0 * eta_n;
            if residual <= TRACE_RESIDUAL_TOL && bounded {
                return Ok(TraceSolution {
                    q0: q,
                    lambda,
                    iterations,
                    residual,
                });
            }
        }
        lambda *= 2.0;
    }
    Err(Error::TraceCompatibility {
        doublings: MAX_DOUBLINGS,
        lambda: lambda / 2.0,
    })
}

fn linear_solve(eta: &ChargeSpectrum, alpha: f64, t: &[f64]) -> Option<(ChargeSpectrum, usize)> {
    let mut q = eta.clone();
    for ell in 0..=eta.band_limit() {
        let d = 1.0 + alpha * t[ell];
        if d.abs() < 1e-8 {
            return None;
        }
        for m in -(ell as i64)..=ell as i64 {
            q.coefficients_mut()[lm_index(ell, m)] /= d;
        }
    }
    Some((q, 1))
}

fn power_iterate(
    eta: &ChargeSpectrum,
    nl: &Nonlinearity,
    t: &[f64],
    eta_n: f64,
) -> Result<Option<(ChargeSpectrum, usize)>> {
    let mut q = eta.clone();
    let mut prev = f64::INFINITY;
    for it in 1..=FIXED_POINT_MAX_ITER {
        let next = combine(eta, &apply_t(&nl.apply(&q)?, t), -1.0);
        let diff = h32(&combine(&next, &q, -1.0));
        q = next;
        if !diff.is_finite() || h32(&q) > 4.0 * eta_n {
            return Ok(None);
        }
        if diff <= 1e-14 * eta_n || (diff <= 1e-12 * eta_n && diff >= prev) {
            return Ok(Some((q, it)));
        }
        if it > 3 && diff > 0.95 * prev {
            return Ok(None);
        }
        prev = diff;
    }
    Ok(None)
}

/// Immutable initial state `ψ₀ = φ₀^λ − G^λ ν(q₀)`.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub lambda: f64,
    pub coupling: Coupling,
    /// Regular part `φ̃₀^λ`.
    pub phi0: RadialSpectrum,
    pub q0: ChargeSpectrum,
    /// Trace of the regular part.
    pub eta: ChargeSpectrum,
    /// `ν(q₀)`.
    pub nu0: ChargeSpectrum,
    pub trace_residual: f64,
    pub iterations: usize,
}

impl InitialData {
    pub fn beta(&self) -> f64 {
        self.coupling.beta()
    }

    pub fn sigma(&self) -> f64 {
        self.coupling.sigma()
    }

    pub fn band_limit(&self) -> usize {
        self.phi0.band_limit()
    }

    /// Hankel representation of the full field `ψ₀`.
    pub fn psi0(&self) -> Result<RadialSpectrum> {
        let green = GreenShell::new(self.band_limit(), self.lambda, self.phi0.grid().clone())?;
        self.psi0_with(&green)
    }

    pub fn psi0_with(&self, green: &GreenShell) -> Result<RadialSpectrum> {
        let sing = green.potential(&self.nu0)?;
        let mut out = self.phi0.clone();
        for ell in 0..=self.band_limit() {
            for m in -(ell as i64)..=ell as i64 {
                for (d, s) in out.mode_mut(ell, m).iter_mut().zip(sing.mode(ell, m)) {
                    *d -= s;
                }
            }
        }
        Ok(out)
    }
}

/// Trace extraction and trace-compatibility solve for a power-law coupling.
pub fn assemble_initial_state(
    phi0: RadialSpectrum,
    beta: f64,
    sigma: f64,
    lambda0: f64,
) -> Result<InitialData> {
    assemble_initial_state_with(phi0, Coupling::Power { beta, sigma }, lambda0)
}

pub fn assemble_initial_state_with(
    phi0: RadialSpectrum,
    coupling: Coupling,
    lambda0: f64,
) -> Result<InitialData> {
    let eta = trace_of(&phi0)?;
    let sol = solve_trace_compatibility(&eta, coupling, lambda0)?;
    let nu0 = Nonlinearity::new(coupling, eta.band_limit())?.apply(&sol.q0)?;
    Ok(InitialData {
        lambda: sol.lambda,
        coupling,
        phi0,
        q0: sol.q0,
        eta,
        nu0,
        trace_residual: sol.residual,
        iterations: sol.iterations,
    })
}

/// Root `z*` of `z = 1 − e^{−2z}` on `(0, 1)`.
pub fn bound_state_root() -> f64 {
    let mut z = 0.8f64;
    for _ in 0..60 {
        let f = z - 1.0 + (-2.0 * z).exp();
        let df = 1.0 - 2.0 * (-2.0 * z).exp();
        let dz = f / df;
        z -= dz;
        if dz.abs() < 1e-16 {
            break;
        }
    }
    z
}

/// Coupling `α` and eigenvalue `−λ*` of the single bound state of the
/// `α = −2` shell: `λ* = z*²`.
pub fn bound_state_lambda() -> f64 {
    let z = bound_state_root();
    z * z
}

/// Linear shell `α = −2` started on its bound state with charge `amplitude`
/// in mode `(0,0)`, decomposed at `λ`: the regular part is
/// `α·c·shell(0,k)·(1/(k²+λ) − 1/(k²+λ*))`.
pub fn bound_state_data(
    l: usize,
    k_grid: Arc<RadialGrid>,
    amplitude: Complex64,
    lambda: f64,
) -> Result<InitialData> {
    let alpha = -2.0;
    let star = bound_state_lambda();
    let mut phi0 = RadialSpectrum::zeros(l, k_grid.clone());
    for (d, &k) in phi0.mode_mut(0, 0).iter_mut().zip(k_grid.nodes()) {
        let k2 = k * k;
        *d = amplitude
            * (alpha * shell_transform(0, k)? * (1.0 / (k2 + lambda) - 1.0 / (k2 + star)));
    }
    assemble_initial_state_with(phi0, Coupling::Linear { alpha }, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{default_k_max, frequency_grid};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn k_grid() -> Arc<RadialGrid> {
        Arc::new(frequency_grid(default_k_max(4), 0.5, 20.0).unwrap())
    }

    #[test]
    fn green_kernel_values() {
        let e2 = (-2.0f64).exp();
        assert!((green_kernel(2.0, 1.0).unwrap() - e2 / (8.0 * PI)).abs() < 1e-16);
        assert!((green_kernel(1.0, 4.0).unwrap() - e2 / (4.0 * PI)).abs() < 1e-16);
        assert!(green_kernel(1.0, 1e6).unwrap() < 1e-300);
        assert!(green_kernel(0.0, 1.0).is_err());
    }

    #[test]
    fn gaussian_trace_is_pointwise_value() {
        let p = RadialProfile::gaussian(0, 0, c(1.0, 0.0), 1.0, 0.0);
        let phi = regular_part(&[p], 2, k_grid()).unwrap();
        let eta = trace_of(&phi).unwrap();
        let want = (4.0 * PI).sqrt() * (-0.5f64).exp();
        assert!((eta.get(0, 0).unwrap() - want).norm() < 1e-10);
        assert!(eta.get(1, 0).unwrap().norm() < 1e-14);
    }

    #[test]
    fn off_centre_profile_trace() {
        // r²·e^{−2r²} in mode (2,-1) is smooth at the origin.
        let p = RadialProfile {
            ell: 2,
            m: -1,
            amplitude: c(0.3, -0.2),
            rate: 2.0,
            center: 0.0,
            power: 2,
        };
        let phi = regular_part(&[p], 3, k_grid()).unwrap();
        let eta = trace_of(&phi).unwrap();
        let want = p.value(1.0) * (4.0 * PI).sqrt();
        let d = (eta.get(2, -1).unwrap() - want).norm();
        assert!(d < 1e-9, "{d}");
    }

    #[test]
    fn green_shell_trace_is_t_lambda() {
        let g = GreenShell::new(3, 1.7, k_grid()).unwrap();
        for ell in 0..=3 {
            let got = g.trace(ell).unwrap();
            assert!((got - t_lambda(ell, 1.7).unwrap()).abs() < 1e-8, "{ell}");
        }
    }

    #[test]
    fn trivial_coupling_is_identity() {
        let eta = ChargeSpectrum::mode(2, 1, 1, c(0.1, 0.2)).unwrap();
        let s = solve_trace_compatibility(
            &eta,
            Coupling::Power {
                beta: 0.0,
                sigma: 1.0,
            },
            1.0,
        )
        .unwrap();
        assert_eq!(s.q0.coefficients(), eta.coefficients());
        assert_eq!((s.lambda, s.iterations), (1.0, 1));
    }

    #[test]
    fn small_data_first_order() {
        let eps = 1e-3;
        let eta = ChargeSpectrum::mode(4, 0, 0, c(eps, 0.0)).unwrap();
        let coupling = Coupling::Power {
            beta: 1.0,
            sigma: 0.5,
        };
        let s = solve_trace_compatibility(&eta, coupling, 1.0).unwrap();
        assert!(s.residual <= 1e-12, "{}", s.residual);
        assert_eq!(s.lambda, 1.0);
        let nu = Nonlinearity::new(coupling, 4).unwrap().apply(&eta).unwrap();
        let nu_n = nu
            .coefficients()
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt();
        let d = s.q0.max_abs_diff(&eta);
        let t0 = t_lambda(0, 1.0).unwrap();
        assert!(
            d <= t0 * nu_n * 1.01 && d >= t0 * nu_n * 0.99,
            "{d} {}",
            t0 * nu_n
        );
    }

    #[test]
    fn linear_coupling_closed_form() {
        let eta = ChargeSpectrum::mode(2, 1, -1, c(0.5, 0.0)).unwrap();
        let s = solve_trace_compatibility(&eta, Coupling::Linear { alpha: 0.7 }, 1.0).unwrap();
        let want = 0.5 / (1.0 + 0.7 * t_lambda(1, 1.0).unwrap());
        assert!((s.q0.get(1, -1).unwrap() - want).norm() < 1e-15);
    }

    #[test]
    fn large_focusing_data_enlarges_lambda() {
        let eta = ChargeSpectrum::mode(2, 0, 0, c(3.0, 0.0)).unwrap();
        let s = solve_trace_compatibility(
            &eta,
            Coupling::Power {
                beta: -1.0,
                sigma: 1.0,
            },
            0.25,
        )
        .unwrap();
        assert!(s.lambda > 0.25);
        assert!(s.residual <= TRACE_RESIDUAL_TOL);
    }

    #[test]
    fn bound_state_root_value() {
        let z = bound_state_root();
        assert!((z - 1.0 + (-2.0 * z).exp()).abs() < 1e-15);
        assert!((z - 0.79681).abs() < 1e-5);
        assert!((bound_state_lambda() - 0.63490).abs() < 1e-5);
        // 1 + α·T^{λ*}_0 = 0 with α = −2.
        assert!((1.0 - 2.0 * t_lambda(0, bound_state_lambda()).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn bound_state_charge_recovered() {
        let d = bound_state_data(2, k_grid(), c(1.0, 0.0), 1.0).unwrap();
        assert!(
            (d.q0.get(0, 0).unwrap() - 1.0).norm() < 1e-6,
            "{:?}",
            d.q0.get(0, 0)
        );
    }
}
