//! Radial Bessel–Fourier (Hankel) transform of order `ℓ + 1/2` with the
//! `r² dr` measure, composite Gauss–Legendre radial grids, and the per-mode
//! transform of the unit-sphere surface measure.

use alloc::sync::Arc;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::quad::{gauss_legendre, push_mapped};
use crate::specfun::{bessel_j_half_all, j_half_unchecked, HalfIntOrder};
use crate::sphgrid::{lm_index, spectrum_len};

/// Composite Gauss–Legendre rule on `[0, k_max]`, panel breakpoints kept.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    panels: Vec<f64>,
}

impl RadialGrid {
    /// Panels between consecutive `breaks` (which must start at 0 and
    /// increase), `points` nodes each.
    pub fn from_breaks(breaks: &[f64], points: usize) -> Result<Self> {
        if breaks.len() < 2 || points == 0 {
            return Err(Error::Precondition("radial grid needs a panel and a node"));
        }
        if breaks[0] != 0.0 || breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition(
                "panel breaks must start at 0 and increase",
            ));
        }
        let rule = gauss_legendre(points);
        let mut nodes = Vec::with_capacity(points * (breaks.len() - 1));
        let mut weights = Vec::with_capacity(nodes.capacity());
        for w in breaks.windows(2) {
            push_mapped(&rule, w[0], w[1], &mut nodes, &mut weights);
        }
        Ok(Self {
            nodes,
            weights,
            panels: breaks.to_vec(),
        })
    }

    /// Equal panels of width `panel` covering `[0, k_max]`.
    pub fn uniform(k_max: f64, panel: f64, points: usize) -> Result<Self> {
        if !(k_max > 0.0) || !(panel > 0.0) {
            return Err(domain(
                "k_max",
                k_max,
                "cutoff and panel width must be positive",
            ));
        }
        let n = (k_max / panel).ceil().max(1.0) as usize;
        let breaks: Vec<f64> = (0..=n).map(|i| k_max * i as f64 / n as f64).collect();
        Self::from_breaks(&breaks, points)
    }

    /// Default spatial grid: 64-point panels of unit width up to `r_max`.
    pub fn default_r(r_max: f64) -> Result<Self> {
        Self::uniform(r_max, 1.0, 64)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn panels(&self) -> &[f64] {
        &self.panels
    }

    pub fn k_max(&self) -> f64 {
        *self.panels.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `J_{ℓ+1/2}(k)/√k`, the mode-`ℓ` transform of the unit-sphere surface
/// measure (without the `(−i)^ℓ` phase).
pub fn shell_transform(ell: usize, k: f64) -> Result<f64> {
    let o = HalfIntOrder::new(ell)?;
    if !(k > 0.0) || !k.is_finite() {
        return Err(domain("k", k, "must be positive and finite"));
    }
    Ok(j_half_unchecked(o.ell(), k) / k.sqrt())
}

#[inline]
fn kernel(ell: usize, x: f64) -> f64 {
    if x == 0.0 {
        if ell == 0 {
            core::f64::consts::FRAC_2_PI.sqrt()
        } else {
            0.0
        }
    } else {
        j_half_unchecked(ell, x) / x.sqrt()
    }
}

/// Evaluates `∫ (J_{ℓ+1/2}(x y)/√(x y)) y² f(y) dy` at each `x` in `points`,
/// the integral taken with the rule of `grid` over samples `f(y_j)`.
pub fn hankel_eval(
    samples: &[Complex64],
    grid: &RadialGrid,
    ell: usize,
    points: &[f64],
) -> Result<Vec<Complex64>> {
    HalfIntOrder::new(ell)?;
    if samples.len() != grid.len() {
        return Err(Error::GridMismatch {
            expected: grid.len(),
            found: samples.len(),
        });
    }
    let weighted: Vec<Complex64> = samples
        .iter()
        .zip(grid.nodes.iter().zip(&grid.weights))
        .map(|(f, (y, w))| f * (w * y * y))
        .collect();
    Ok(points
        .iter()
        .map(|&x| {
            grid.nodes
                .iter()
                .zip(&weighted)
                .map(|(&y, f)| f * kernel(ell, x * y))
                .sum()
        })
        .collect())
}

/// Forward transform of a radial profile sampled on `r_grid`, evaluated at the
/// nodes of `k_grid`.
pub fn hankel_forward(
    profile: &[Complex64],
    r_grid: &RadialGrid,
    ell: usize,
    k_grid: &RadialGrid,
) -> Result<Vec<Complex64>> {
    hankel_eval(profile, r_grid, ell, k_grid.nodes())
}

/// Same kernel in the other direction; the transform is its own inverse.
pub fn hankel_inverse(
    spectrum: &[Complex64],
    k_grid: &RadialGrid,
    ell: usize,
    r_points: &[f64],
) -> Result<Vec<Complex64>> {
    hankel_eval(spectrum, k_grid, ell, r_points)
}

/// `J_{ℓ+1/2}(x)/√x` for `ℓ = 0..=lmax` at every `x` in `points`, row-major
/// by point.
pub fn kernel_table(lmax: usize, points: &[f64]) -> Vec<f64> {
    let mut out = alloc::vec![0.0; (lmax + 1) * points.len()];
    for (row, &x) in out.chunks_mut(lmax + 1).zip(points) {
        if x == 0.0 {
            row[0] = kernel(0, 0.0);
            continue;
        }
        bessel_j_half_all(lmax, x, row);
        let s = 1.0 / x.sqrt();
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    out
}

/// Per-mode frequency profiles `f̃_{ℓ,m}(k_j)` on a shared grid.
#[derive(Debug, Clone)]
pub struct RadialSpectrum {
    l: usize,
    grid: Arc<RadialGrid>,
    data: Vec<Complex64>,
}

impl RadialSpectrum {
    pub fn zeros(l: usize, grid: Arc<RadialGrid>) -> Self {
        let n = spectrum_len(l) * grid.len();
        Self {
            l,
            grid,
            data: alloc::vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn band_limit(&self) -> usize {
        self.l
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn mode(&self, ell: usize, m: i64) -> &[Complex64] {
        let n = self.grid.len();
        let i = lm_index(ell, m);
        &self.data[i * n..(i + 1) * n]
    }

    pub fn mode_mut(&mut self, ell: usize, m: i64) -> &mut [Complex64] {
        let n = self.grid.len();
        let i = lm_index(ell, m);
        &mut self.data[i * n..(i + 1) * n]
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            l: self.l,
            grid: self.grid.clone(),
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    /// `Σ_j w_j k_j^{2+2s} |f̃_{ℓ,m}(k_j)|²` summed over modes.
    pub fn weighted_sum(&self, s: f64) -> f64 {
        let n = self.grid.len();
        let pw: Vec<f64> = self
            .grid
            .nodes
            .iter()
            .zip(&self.grid.weights)
            .map(|(k, w)| w * k.powf(2.0 + 2.0 * s))
            .collect();
        self.data
            .chunks(n)
            .map(|mode| {
                mode.iter()
                    .zip(&pw)
                    .map(|(z, p)| p * z.norm_sqr())
                    .sum::<f64>()
            })
            .sum()
    }
}

/// `L²(ℝ³)` norm of the field represented by `spec`.
pub fn plancherel_l2(spec: &RadialSpectrum) -> f64 {
    spec.weighted_sum(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn gaussian(grid: &RadialGrid, a: f64) -> Vec<Complex64> {
        grid.nodes()
            .iter()
            .map(|r| Complex64::new((-a * r * r).exp(), 0.0))
            .collect()
    }

    #[test]
    fn grid_weights_sum_to_cutoff() {
        let g = RadialGrid::uniform(200.0, 0.7, 16).unwrap();
        let s: f64 = g.weights().iter().sum();
        assert!((s - 200.0).abs() < 1e-12);
        assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(RadialGrid::from_breaks(&[0.0, 1.0, 1.0], 4).is_err());
    }

    #[test]
    fn gaussian_is_self_reciprocal() {
        let r = RadialGrid::default_r(40.0).unwrap();
        let k = RadialGrid::uniform(20.0, 1.0, 32).unwrap();
        let g = hankel_forward(&gaussian(&r, 0.5), &r, 0, &k).unwrap();
        for (kj, v) in k.nodes().iter().zip(&g) {
            if *kj <= 10.0 {
                assert!((v.re - (-0.5 * kj * kj).exp()).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn zero_profile() {
        let r = RadialGrid::default_r(10.0).unwrap();
        let k = RadialGrid::uniform(5.0, 1.0, 8).unwrap();
        let z = alloc::vec![Complex64::new(0.0, 0.0); r.len()];
        assert!(hankel_forward(&z, &r, 3, &k)
            .unwrap()
            .iter()
            .all(|v| v.norm() == 0.0));
        assert!(matches!(
            hankel_forward(&z[1..], &r, 3, &k),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn shell_examples() {
        assert!(shell_transform(0, PI).unwrap().abs() < 1e-15);
        let want = (2.0 / PI) / (PI / 2.0).sqrt();
        assert!((shell_transform(0, PI / 2.0).unwrap() - want).abs() < 1e-15);
        // J_{1/2}(k)/√k = √(2/π)·sin(k)/k tends to √(2/π), not to zero.
        let k = 1e-4;
        assert!((shell_transform(0, k).unwrap() - (2.0 / PI).sqrt()).abs() < 1e-6);
        assert!(shell_transform(1, k).unwrap().abs() < 1e-4);
        assert!(shell_transform(0, 0.0).is_err());
    }

    #[test]
    fn plancherel_of_gaussian() {
        let r = RadialGrid::default_r(40.0).unwrap();
        let k = Arc::new(RadialGrid::uniform(20.0, 1.0, 32).unwrap());
        let mut spec = RadialSpectrum::zeros(2, k.clone());
        // e^{−r²/2} in the (0,0) mode, i.e. profile √(4π)·Y₀₀-normalised.
        let prof: Vec<Complex64> = gaussian(&r, 0.5)
            .iter()
            .map(|z| z * (4.0 * PI).sqrt())
            .collect();
        let g = hankel_forward(&prof, &r, 0, &k).unwrap();
        spec.mode_mut(0, 0).copy_from_slice(&g);
        let want = PI.powf(0.75);
        assert!((plancherel_l2(&spec) - want).abs() < 1e-10);
        let scaled = spec.scale(Complex64::new(0.0, -3.0));
        assert!((plancherel_l2(&scaled) - 3.0 * plancherel_l2(&spec)).abs() < 1e-12);
    }

    #[test]
    fn kernel_table_matches_pointwise() {
        let pts = [0.0, 0.3, 5.0, 70.0];
        let t = kernel_table(10, &pts);
        for (i, &x) in pts.iter().enumerate() {
            for ell in 0..=10 {
                let want = kernel(ell, x);
                assert!((t[i * 11 + ell] - want).abs() <= 1e-13 * want.abs().max(1e-300));
            }
        }
    }
}
