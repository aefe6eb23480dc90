//! Spherical-harmonic transforms on a Gauss–Legendre × equispaced grid,
//! coefficient Sobolev norms, grid Lᵖ norms and the pointwise nonlinearity.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::quad::gauss_legendre;
use crate::specfun::{legendre_normalized, tri_index};

/// Flat index of `(ℓ, m)` in a [`ChargeSpectrum`]: `ℓ² + ℓ + m`.
#[inline]
pub fn lm_index(ell: usize, m: i64) -> usize {
    ((ell * ell + ell) as i64 + m) as usize
}

/// Number of `(ℓ, m)` pairs with `ℓ ≤ l`.
#[inline]
pub fn spectrum_len(l: usize) -> usize {
    (l + 1) * (l + 1)
}

/// Quadrature grid on S²: Gauss–Legendre in `cos θ`, trapezoidal in `φ`.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    n_theta: usize,
    n_phi: usize,
    l_grid: usize,
    theta: Vec<f64>,
    weights: Vec<f64>,
    // P̄_ℓ^m(cos θ_i) for every row, `tri_index` layout, rows concatenated.
    legendre: Vec<f64>,
    // e^{−imφ_j} for m = 0..=l_grid, rows of length n_phi.
    twiddle: Vec<Complex64>,
}

impl SphereGrid {
    /// Minimal grid exact for band limit `l_grid`: `n_theta = l_grid + 1`,
    /// `n_phi = 2·l_grid + 2`.
    pub fn new(l_grid: usize) -> Self {
        Self::build(l_grid + 1, 2 * l_grid + 2, l_grid)
    }

    /// Grid with explicit sizes; the exactness degree is the largest band
    /// limit both directions support.
    pub fn with_sizes(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta == 0 || n_phi == 0 {
            return Err(Error::Precondition("grid sizes must be positive"));
        }
        let l_grid = (n_theta - 1).min((n_phi - 1) / 2);
        Ok(Self::build(n_theta, n_phi, l_grid))
    }

    fn build(n_theta: usize, n_phi: usize, l_grid: usize) -> Self {
        let (x, w) = gauss_legendre(n_theta);
        // Row 0 is the north pole side: θ ascending means cos θ descending.
        let mut theta = Vec::with_capacity(n_theta);
        let mut weights = Vec::with_capacity(n_theta);
        for i in (0..n_theta).rev() {
            theta.push(x[i].acos());
            weights.push(w[i]);
        }
        let tri = tri_index(l_grid, l_grid) + 1;
        let mut legendre = alloc::vec![0.0; tri * n_theta];
        for (i, &t) in theta.iter().enumerate() {
            let (s, c) = t.sin_cos();
            legendre_normalized(l_grid, c, s, &mut legendre[i * tri..(i + 1) * tri]);
        }
        let mut twiddle = Vec::with_capacity((l_grid + 1) * n_phi);
        for m in 0..=l_grid {
            for j in 0..n_phi {
                let phi = 2.0 * PI * j as f64 / n_phi as f64;
                twiddle.push(Complex64::from_polar(1.0, -(m as f64) * phi));
            }
        }
        Self {
            n_theta,
            n_phi,
            l_grid,
            theta,
            weights,
            legendre,
            twiddle,
        }
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn l_grid(&self) -> usize {
        self.l_grid
    }

    /// Colatitudes, ascending.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Gauss–Legendre weights matching [`Self::theta`].
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn phi(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_phi as f64
    }

    pub fn d_phi(&self) -> f64 {
        2.0 * PI / self.n_phi as f64
    }

    /// Total quadrature area, 4π up to rounding.
    pub fn area(&self) -> f64 {
        self.weights.iter().sum::<f64>() * self.n_phi as f64 * self.d_phi()
    }

    fn legendre_row(&self, i: usize) -> &[f64] {
        let tri = tri_index(self.l_grid, self.l_grid) + 1;
        &self.legendre[i * tri..(i + 1) * tri]
    }

    fn twiddle_row(&self, m: usize) -> &[Complex64] {
        &self.twiddle[m * self.n_phi..(m + 1) * self.n_phi]
    }
}

/// Complex samples on a [`SphereGrid`], row-major `n_theta × n_phi`.
#[derive(Debug, Clone)]
pub struct SphereField {
    values: Vec<Complex64>,
    grid: Arc<SphereGrid>,
}

impl SphereField {
    pub fn zeros(grid: Arc<SphereGrid>) -> Self {
        let n = grid.n_theta * grid.n_phi;
        Self {
            values: alloc::vec![Complex64::new(0.0, 0.0); n],
            grid,
        }
    }

    pub fn from_values(grid: Arc<SphereGrid>, values: Vec<Complex64>) -> Result<Self> {
        let expected = grid.n_theta * grid.n_phi;
        if values.len() != expected {
            return Err(Error::GridMismatch {
                expected,
                found: values.len(),
            });
        }
        Ok(Self { values, grid })
    }

    /// Samples `f(θ, φ)` at every node.
    pub fn from_fn(grid: Arc<SphereGrid>, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.n_theta * grid.n_phi);
        for i in 0..grid.n_theta {
            for j in 0..grid.n_phi {
                values.push(f(grid.theta[i], grid.phi(j)));
            }
        }
        Self { values, grid }
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.grid.n_phi + j]
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            values: self.values.iter().map(|&z| f(z)).collect(),
            grid: self.grid.clone(),
        }
    }
}

/// Spherical-harmonic coefficients `c_{ℓ,m}` for `ℓ ≤ L`, indexed by
/// [`lm_index`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeSpectrum {
    l: usize,
    coef: Vec<Complex64>,
}

impl ChargeSpectrum {
    pub fn zeros(l: usize) -> Self {
        Self {
            l,
            coef: alloc::vec![Complex64::new(0.0, 0.0); spectrum_len(l)],
        }
    }

    pub fn from_coefficients(l: usize, coef: Vec<Complex64>) -> Result<Self> {
        if coef.len() != spectrum_len(l) {
            return Err(Error::GridMismatch {
                expected: spectrum_len(l),
                found: coef.len(),
            });
        }
        Ok(Self { l, coef })
    }

    /// Single-mode spectrum.
    pub fn mode(l: usize, ell: usize, m: i64, value: Complex64) -> Result<Self> {
        let mut s = Self::zeros(l);
        s.set(ell, m, value)?;
        Ok(s)
    }

    pub fn band_limit(&self) -> usize {
        self.l
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coef
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coef
    }

    fn check(&self, ell: usize, m: i64) -> Result<usize> {
        if ell > self.l || m.unsigned_abs() as usize > ell {
            return Err(Error::Index { ell, m });
        }
        Ok(lm_index(ell, m))
    }

    pub fn get(&self, ell: usize, m: i64) -> Result<Complex64> {
        Ok(self.coef[self.check(ell, m)?])
    }

    pub fn set(&mut self, ell: usize, m: i64, value: Complex64) -> Result<()> {
        let i = self.check(ell, m)?;
        self.coef[i] = value;
        Ok(())
    }

    /// Iterates `(ℓ, m, c_{ℓ,m})` in index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, i64, Complex64)> + '_ {
        (0..=self.l).flat_map(move |ell| {
            (-(ell as i64)..=ell as i64).map(move |m| (ell, m, self.coef[lm_index(ell, m)]))
        })
    }

    /// Copy truncated or zero-padded to band limit `l`.
    pub fn with_band_limit(&self, l: usize) -> Self {
        let mut out = Self::zeros(l);
        let n = spectrum_len(l.min(self.l));
        out.coef[..n].copy_from_slice(&self.coef[..n]);
        out
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            l: self.l,
            coef: self.coef.iter().map(|z| z * c).collect(),
        }
    }

    /// Largest coefficient-wise distance to `other` (same band limit assumed).
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coef
            .iter()
            .zip(&other.coef)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest deviation from `c_{ℓ,−m} = (−1)^m c*_{ℓ,m}`.
    pub fn real_symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (ell, m, c) in self.iter() {
            if m > 0 {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                let d = (self.coef[lm_index(ell, -m)] - c.conj() * sign).norm();
                worst = worst.max(d);
            }
        }
        worst
    }
}

/// Quadrature coefficients `c_{ℓ,m} = Σ w_i Δφ Y*_{ℓ,m}(θ_i, φ_j) g_ij`.
pub fn sht_analysis(field: &SphereField, l: usize) -> Result<ChargeSpectrum> {
    let grid = &*field.grid;
    if l > grid.l_grid {
        return Err(Error::BandLimit {
            requested: l,
            available: grid.l_grid,
        });
    }
    let mut out = ChargeSpectrum::zeros(l);
    let dphi = grid.d_phi();
    let mut g = alloc::vec![Complex64::new(0.0, 0.0); 2 * l + 1];
    for i in 0..grid.n_theta {
        let row = &field.values[i * grid.n_phi..(i + 1) * grid.n_phi];
        for m in 0..=l {
            let tw = grid.twiddle_row(m);
            let mut pos = Complex64::new(0.0, 0.0);
            let mut neg = Complex64::new(0.0, 0.0);
            for (v, t) in row.iter().zip(tw) {
                pos += v * t;
                neg += v * t.conj();
            }
            g[l + m] = pos * dphi;
            g[l - m] = neg * dphi;
        }
        let leg = grid.legendre_row(i);
        let w = grid.weights[i];
        for ell in 0..=l {
            for m in 0..=ell {
                let p = w * leg[tri_index(ell, m)];
                out.coef[lm_index(ell, m as i64)] += g[l + m] * p;
                if m > 0 {
                    let sp = if m % 2 == 0 { p } else { -p };
                    out.coef[lm_index(ell, -(m as i64))] += g[l - m] * sp;
                }
            }
        }
    }
    Ok(out)
}

/// Pointwise evaluation of `Σ c_{ℓ,m} Y_{ℓ,m}` on `grid`.
pub fn sht_synthesis(spec: &ChargeSpectrum, grid: &Arc<SphereGrid>) -> Result<SphereField> {
    let l = spec.l;
    if l > grid.l_grid {
        return Err(Error::BandLimit {
            requested: l,
            available: grid.l_grid,
        });
    }
    let mut field = SphereField::zeros(grid.clone());
    let mut f = alloc::vec![Complex64::new(0.0, 0.0); 2 * l + 1];
    for i in 0..grid.n_theta {
        let leg = grid.legendre_row(i);
        for v in f.iter_mut() {
            *v = Complex64::new(0.0, 0.0);
        }
        for ell in 0..=l {
            for m in 0..=ell {
                let p = leg[tri_index(ell, m)];
                f[l + m] += spec.coef[lm_index(ell, m as i64)] * p;
                if m > 0 {
                    let sp = if m % 2 == 0 { p } else { -p };
                    f[l - m] += spec.coef[lm_index(ell, -(m as i64))] * sp;
                }
            }
        }
        let row = &mut field.values[i * grid.n_phi..(i + 1) * grid.n_phi];
        for (j, v) in row.iter_mut().enumerate() {
            let mut acc = f[l];
            for m in 1..=l {
                let t = grid.twiddle[m * grid.n_phi + j];
                acc += f[l + m] * t.conj() + f[l - m] * t;
            }
            *v = acc;
        }
    }
    Ok(field)
}

/// `√(Σ ⟨ℓ⟩^{2μ} |c_{ℓ,m}|²)` with `⟨ℓ⟩ = √(1 + ℓ²)`.
pub fn sobolev_norm(spec: &ChargeSpectrum, mu: f64) -> f64 {
    let mut s = 0.0;
    for ell in 0..=spec.l {
        let weight = (1.0 + (ell * ell) as f64).powf(mu);
        let lo = lm_index(ell, -(ell as i64));
        let hi = lm_index(ell, ell as i64);
        let band: f64 = spec.coef[lo..=hi].iter().map(|c| c.norm_sqr()).sum();
        s += weight * band;
    }
    s.sqrt()
}

/// Grid `Lᵖ(S²)` norm; `p = ∞` gives the grid maximum.
pub fn lp_norm(field: &SphereField, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(domain("p", p, "must be at least 1"));
    }
    if p.is_infinite() {
        return Ok(field.values.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    let grid = &*field.grid;
    let dphi = grid.d_phi();
    let mut s = 0.0;
    for i in 0..grid.n_theta {
        let row = &field.values[i * grid.n_phi..(i + 1) * grid.n_phi];
        let r: f64 = row.iter().map(|z| z.norm().powf(p)).sum();
        s += grid.weights[i] * dphi * r;
    }
    Ok(s.powf(1.0 / p))
}

/// `ν(z) = β |z|^{2σ} z`, with `ν(0) = 0`.
#[inline]
pub fn nu_point(z: Complex64, beta: f64, sigma: f64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    z * (beta * r.powf(2.0 * sigma))
}

/// Pointwise `ν` on a sampled field.
pub fn apply_nu(field: &SphereField, beta: f64, sigma: f64) -> SphereField {
    field.map(|z| nu_point(z, beta, sigma))
}

/// Band limit of the oversampled grid used to evaluate `ν(q)`:
/// `⌈2σ + 2⌉·L`.
pub fn dealias_band(l: usize, sigma: f64) -> usize {
    ((2.0 * sigma + 2.0).ceil() as usize * l).max(1)
}

/// `ν(q)` re-analysed at band `L` after pointwise evaluation on `grid`, which
/// should be built with [`dealias_band`].
pub fn nu_spectrum(
    q: &ChargeSpectrum,
    beta: f64,
    sigma: f64,
    grid: &Arc<SphereGrid>,
) -> Result<ChargeSpectrum> {
    let field = sht_synthesis(q, grid)?;
    sht_analysis(&apply_nu(&field, beta, sigma), q.l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::sph_harm;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn grid_area_is_four_pi() {
        for l in [0, 1, 5, 32, 64] {
            let g = SphereGrid::new(l);
            assert!((g.area() - 4.0 * PI).abs() < 1e-13);
            assert!(g.n_theta() > l && g.n_phi() > 2 * l);
        }
    }

    #[test]
    fn constant_field_analysis() {
        let g = Arc::new(SphereGrid::new(6));
        let f = SphereField::from_fn(g, |_, _| c(1.0, 0.0));
        let s = sht_analysis(&f, 6).unwrap();
        for (ell, m, v) in s.iter() {
            let want = if ell == 0 { (4.0 * PI).sqrt() } else { 0.0 };
            assert!((v - c(want, 0.0)).norm() < 1e-13, "{ell} {m}");
        }
    }

    #[test]
    fn single_harmonic_analysis() {
        let g = Arc::new(SphereGrid::new(8));
        let f = SphereField::from_fn(g, |t, p| sph_harm(3, 2, t, p).unwrap());
        let s = sht_analysis(&f, 8).unwrap();
        for (ell, m, v) in s.iter() {
            let want = if (ell, m) == (3, 2) { 1.0 } else { 0.0 };
            assert!((v - c(want, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn synthesis_of_constant_mode() {
        let g = Arc::new(SphereGrid::new(4));
        let s = ChargeSpectrum::mode(4, 0, 0, c((4.0 * PI).sqrt(), 0.0)).unwrap();
        let f = sht_synthesis(&s, &g).unwrap();
        assert!(f.values().iter().all(|v| (v - c(1.0, 0.0)).norm() < 1e-14));
        let z = sht_synthesis(&ChargeSpectrum::zeros(4), &g).unwrap();
        assert!(z.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn band_limit_errors() {
        let g = Arc::new(SphereGrid::new(4));
        let f = SphereField::zeros(g.clone());
        assert!(matches!(sht_analysis(&f, 5), Err(Error::BandLimit { .. })));
        assert!(matches!(
            sht_synthesis(&ChargeSpectrum::zeros(5), &g),
            Err(Error::BandLimit { .. })
        ));
    }

    #[test]
    fn orthonormality_on_grid() {
        let l = 32;
        let g = Arc::new(SphereGrid::new(l));
        for &(ell, m) in &[(0usize, 0i64), (7, -3), (20, 11), (32, 32), (32, -1)] {
            let f = SphereField::from_fn(g.clone(), |t, p| sph_harm(ell, m, t, p).unwrap());
            let s = sht_analysis(&f, l).unwrap();
            for (e2, m2, v) in s.iter() {
                let want = if (e2, m2) == (ell, m) { 1.0 } else { 0.0 };
                assert!((v - c(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn sobolev_examples() {
        let s = ChargeSpectrum::mode(4, 1, 0, c(1.0, 0.0)).unwrap();
        assert!((sobolev_norm(&s, 1.5).powi(2) - 2f64.powf(1.5)).abs() < 1e-14);
        let s4 = ChargeSpectrum::mode(4, 4, 0, c(1.0, 0.0)).unwrap();
        assert!((sobolev_norm(&s4, 0.5) - 17f64.powf(0.25)).abs() < 1e-14);
    }

    #[test]
    fn lp_examples() {
        let g = Arc::new(SphereGrid::new(3));
        let one = SphereField::from_fn(g.clone(), |_, _| c(1.0, 0.0));
        assert!((lp_norm(&one, 2.0).unwrap() - (4.0 * PI).sqrt()).abs() < 1e-13);
        let k = SphereField::from_fn(g.clone(), |_, _| c(0.0, 2.5));
        let want = 2.5 * (4.0 * PI).powf(1.0 / 3.0);
        assert!((lp_norm(&k, 3.0).unwrap() - want).abs() < 1e-12);
        assert_eq!(lp_norm(&k, f64::INFINITY).unwrap(), 2.5);
        assert!(lp_norm(&k, 0.5).is_err());
    }

    #[test]
    fn lp4_of_y10() {
        // ∫|Y_{1,0}|⁴ = (3/(4π))² · 2π · ∫ x⁴ dx = (9/(16π²))·2π·(2/5)
        let g = Arc::new(SphereGrid::new(4));
        let f = SphereField::from_fn(g, |t, p| sph_harm(1, 0, t, p).unwrap());
        let want = (9.0 / (16.0 * PI * PI) * 2.0 * PI * 0.4).powf(0.25);
        assert!((lp_norm(&f, 4.0).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn nu_examples() {
        assert!((nu_point(c(2.0, 0.0), 1.0, 0.5) - c(4.0, 0.0)).norm() < 1e-15);
        assert!((nu_point(c(0.0, 1.0), -3.0, 1.0) - c(0.0, -3.0)).norm() < 1e-15);
        assert_eq!(nu_point(c(0.7, -0.2), 0.0, 1.0), c(0.0, 0.0));
        assert_eq!(nu_point(c(0.0, 0.0), 2.0, 0.25), c(0.0, 0.0));
    }
}
