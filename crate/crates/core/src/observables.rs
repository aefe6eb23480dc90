//! Field reconstruction in the Hankel domain and the physical diagnostics.
//!
//! `ψ̃_{ℓ,m}(t,k_j) = e^{−ik_j²t}[φ̃₀ − shell·ν(q₀)/(k_j²+λ)] − i·shell·H̄_{ℓ,m,j}(t)`.
//! Above the grid cutoff `K` the field is modelled adiabatically as
//! `−shell·ν(q(t))/k²`, which contributes `C_ℓ|ν|²` to the mass,
//! `A_ℓ|ν|²` to the kinetic energy and `−ν·r^{−1/2}∫_K^∞ J(kr)J(k)/k dk` to
//! radial profiles.

use core::f64::consts::PI;

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::domain::Nonlinearity;
use crate::error::Result;
use crate::hankel::{kernel_table, RadialGrid, RadialSpectrum};
use crate::propagator::{ell_of, ModeExecutor, Propagator, Sequential, SolverState};
use crate::specfun::hankel_amplitudes;
use crate::sphgrid::{
    lm_index, lp_norm, sht_synthesis, sobolev_norm, spectrum_len, ChargeSpectrum,
};
use crate::tail::{inverse_power_tail, ray};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Radial offset of the one-sided jump stencils.
pub const JUMP_OFFSET: f64 = 1e-3;

/// One line of diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub energy: f64,
    pub q_h32: f64,
    pub q_sup: f64,
    pub jump_residual: f64,
    pub trace_residual: f64,
    pub picard_ratio: f64,
}

/// Hankel representation of the field at `t_n`.
pub fn reconstruct_field(prop: &Propagator, st: &SolverState) -> RadialSpectrum {
    reconstruct_field_with(prop, st, &Sequential)
}

pub fn reconstruct_field_with(
    prop: &Propagator,
    st: &SolverState,
    exec: &dyn ModeExecutor,
) -> RadialSpectrum {
    let l = prop.band_limit();
    let grid = prop.grid().clone();
    let nj = grid.len();
    let lam = prop.lambda();
    let omega: Vec<f64> = grid.nodes().iter().map(|k| k * k).collect();
    let mut out = RadialSpectrum::zeros(l, grid);
    let mut dummy = vec![ZERO; spectrum_len(l)];
    let phi0 = prop.phi0();
    let nu0 = prop.nu0().coefficients();
    let phase = st.phases();
    exec.for_each_chunk(out.data_mut(), nj, &mut dummy, &|i, dst, _| {
        let ell = ell_of(i);
        let m = i as i64 - (ell * ell + ell) as i64;
        let shell = prop.shell(ell);
        let reg = phi0.mode(ell, m);
        let acc = st.accumulator(ell, m);
        let v0 = nu0[i];
        for j in 0..nj {
            let init = reg[j] - v0 * (shell[j] / (omega[j] + lam));
            dst[j] = phase[j] * init - I * acc[j] * shell[j];
        }
    });
    out
}

/// `‖ψ‖²_{L²(ℝ³)}` on the grid.
pub fn mass(psi: &RadialSpectrum) -> f64 {
    psi.weighted_sum(0.0)
}

/// `‖∇ψ‖²_{L²(ℝ³)}` on the grid.
pub fn kinetic(psi: &RadialSpectrum) -> f64 {
    psi.weighted_sum(1.0)
}

/// Grid kinetic energy plus the boundary potential of `nl`.
pub fn energy(psi: &RadialSpectrum, q: &ChargeSpectrum, nl: &Nonlinearity) -> Result<f64> {
    Ok(kinetic(psi) + nl.potential(q)?)
}

fn l2(q: &ChargeSpectrum) -> f64 {
    q.coefficients()
        .iter()
        .map(|c| c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn relative(diff: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Relative `L²(S²)` distance between the grid trace of `psi` and `q`.
pub fn charge_consistency(psi: &RadialSpectrum, q: &ChargeSpectrum) -> Result<f64> {
    let tr = crate::domain::trace_of(psi)?;
    let mut d = tr;
    for (a, b) in d.coefficients_mut().iter_mut().zip(q.coefficients()) {
        *a -= b;
    }
    Ok(relative(l2(&d), l2(q)))
}

/// `r^{−1/2} ∫_K^∞ J_{ℓ+1/2}(kr) J_{ℓ+1/2}(k)/k dk`, each Hankel product on
/// its own vertical ray.
pub fn radial_tail(ell: usize, cut: f64, r: f64, tol: f64) -> Result<f64> {
    if (r - 1.0).abs() < 1e-15 {
        return inverse_power_tail(ell, cut, 1.0, tol);
    }
    let sign = if ell.is_multiple_of(2) { -1.0 } else { 1.0 };
    let k0 = Complex64::new(cut, 0.0);
    let amp = |z: Complex64| {
        let (s1, t1) = hankel_amplitudes(ell, z * r);
        let (s, t) = hankel_amplitudes(ell, z);
        (s1, t1, s, t)
    };
    let h0 = (1.0 / (r - 1.0).abs()).min(1.0 / (r + 1.0)).min(1.0);
    let pp = ray(
        &|z: Complex64| {
            let (s1, _, s, _) = amp(z);
            (I * z * (1.0 + r)).exp() * s1 * s / (z * z)
        },
        k0,
        I,
        1.0 / (1.0 + r),
        tol,
    )?;
    let mm = ray(
        &|z: Complex64| {
            let (_, t1, _, t) = amp(z);
            (-I * z * (1.0 + r)).exp() * t1 * t / (z * z)
        },
        k0,
        -I,
        1.0 / (1.0 + r),
        tol,
    )?;
    let up = if r > 1.0 { I } else { -I };
    let pm = ray(
        &|z: Complex64| {
            let (s1, _, _, t) = amp(z);
            (I * z * (r - 1.0)).exp() * s1 * t / (z * z)
        },
        k0,
        up,
        h0,
        tol,
    )?;
    let mp = ray(
        &|z: Complex64| {
            let (_, t1, s, _) = amp(z);
            (-I * z * (r - 1.0)).exp() * t1 * s / (z * z)
        },
        k0,
        -up,
        h0,
        tol,
    )?;
    Ok(((pp + mm) * sign + pm + mp).re / (2.0 * PI * r))
}

const NR: usize = 5;

fn one_sided_jump(
    u0: Complex64,
    p1: Complex64,
    p2: Complex64,
    m1: Complex64,
    m2: Complex64,
    h: f64,
) -> Complex64 {
    let dp = (-3.0 * u0 + 4.0 * p1 - p2) / (2.0 * h);
    let dm = (3.0 * u0 - 4.0 * m1 + m2) / (2.0 * h);
    dp - dm
}

/// `∂ᵣu(1⁺) − ∂ᵣu(1⁻)` from second-order one-sided stencils.
fn derivative_jump(u: &[Complex64; NR], h: f64) -> Complex64 {
    one_sided_jump(u[0], u[1], u[3], u[2], u[4], h)
}

/// Cached radial synthesis at `r = 1, 1±h, 1±2h`.
#[derive(Debug, Clone)]
pub struct Observer {
    l: usize,
    h: f64,
    radii: [f64; NR],
    /// Per radius, per ℓ, the row `w_j k_j² J(k_j r)/√(k_j r)`.
    rows: Vec<f64>,
    /// Per radius, per ℓ, the tail profile.
    tails: Vec<f64>,
    nj: usize,
}

impl Observer {
    pub fn new(grid: &RadialGrid, l: usize, h: f64) -> Result<Self> {
        let radii = [1.0, 1.0 + h, 1.0 - h, 1.0 + 2.0 * h, 1.0 - 2.0 * h];
        let nj = grid.len();
        let mut rows = vec![0.0; NR * (l + 1) * nj];
        let mut tails = vec![0.0; NR * (l + 1)];
        for (ir, &r) in radii.iter().enumerate() {
            let pts: Vec<f64> = grid.nodes().iter().map(|k| k * r).collect();
            let tab = kernel_table(l, &pts);
            for ell in 0..=l {
                let row = &mut rows[(ir * (l + 1) + ell) * nj..(ir * (l + 1) + ell + 1) * nj];
                for j in 0..nj {
                    let k = grid.nodes()[j];
                    row[j] = grid.weights()[j] * k * k * tab[j * (l + 1) + ell];
                }
                tails[ir * (l + 1) + ell] = radial_tail(ell, grid.k_max(), r, 1e-13)?;
            }
        }
        Ok(Self {
            l,
            h,
            radii,
            rows,
            tails,
            nj,
        })
    }

    /// Same stencils with the tail beyond `K` dropped (plain truncated
    /// synthesis).
    pub fn without_tail(mut self) -> Self {
        self.tails.iter_mut().for_each(|t| *t = 0.0);
        self
    }

    pub fn radii(&self) -> &[f64; NR] {
        &self.radii
    }

    /// `u_{ℓ,m}(r)` at the stencil radii with the adiabatic tail for density
    /// `nu`.
    pub fn profile(
        &self,
        psi: &RadialSpectrum,
        nu: Complex64,
        ell: usize,
        m: i64,
    ) -> [Complex64; NR] {
        let mode = psi.mode(ell, m);
        let mut out = [ZERO; NR];
        for (ir, o) in out.iter_mut().enumerate() {
            let base = (ir * (self.l + 1) + ell) * self.nj;
            let row = &self.rows[base..base + self.nj];
            let s: Complex64 = row.iter().zip(mode).map(|(w, f)| f * w).sum();
            *o = s - nu * self.tails[ir * (self.l + 1) + ell];
        }
        out
    }

    /// `∂ᵣu(1⁺) − ∂ᵣu(1⁻)` per mode from second-order one-sided stencils.
    pub fn jump(&self, psi: &RadialSpectrum, nu: &ChargeSpectrum) -> ChargeSpectrum {
        let mut out = ChargeSpectrum::zeros(self.l);
        for ell in 0..=self.l {
            for m in -(ell as i64)..=ell as i64 {
                let i = lm_index(ell, m);
                let u = self.profile(psi, nu.coefficients()[i], ell, m);
                out.coefficients_mut()[i] = derivative_jump(&u, self.h);
            }
        }
        out
    }

    /// `‖jump − ν‖/‖ν‖` (absolute when `ν = 0`).
    pub fn jump_residual(&self, psi: &RadialSpectrum, nu: &ChargeSpectrum) -> f64 {
        let mut d = self.jump(psi, nu);
        for (a, b) in d.coefficients_mut().iter_mut().zip(nu.coefficients()) {
            *a -= b;
        }
        relative(l2(&d), l2(nu))
    }

    /// Trace `u(1)` including the tail, per mode.
    pub fn trace(&self, psi: &RadialSpectrum, nu: &ChargeSpectrum) -> ChargeSpectrum {
        let mut out = ChargeSpectrum::zeros(self.l);
        for ell in 0..=self.l {
            for m in -(ell as i64)..=ell as i64 {
                let i = lm_index(ell, m);
                out.coefficients_mut()[i] = self.profile(psi, nu.coefficients()[i], ell, m)[0];
            }
        }
        out
    }

    /// Full diagnostics record of `st`, fusing reconstruction with the
    /// grid sums in one pass per mode.
    pub fn record(
        &self,
        prop: &Propagator,
        st: &SolverState,
        exec: &dyn ModeExecutor,
    ) -> Result<DiagnosticsRecord> {
        let l = self.l;
        let nm = spectrum_len(l);
        let grid = prop.grid();
        let nj = self.nj;
        let lam = prop.lambda();
        let nodes = grid.nodes();
        let weights = grid.weights();
        let phi0 = prop.phi0();
        let nu0 = prop.nu0().coefficients();
        let phase = st.phases();
        // Per mode: [mass, kinetic, u(r₀..r₄)].
        const W: usize = NR + 2;
        let mut sums = vec![ZERO; nm * W];
        let mut dummy = vec![ZERO; nm];
        exec.for_each_chunk(&mut sums, W, &mut dummy, &|i, out, _| {
            let ell = ell_of(i);
            let m = i as i64 - (ell * ell + ell) as i64;
            let shell = prop.shell(ell);
            let reg = phi0.mode(ell, m);
            let acc = st.accumulator(ell, m);
            let v0 = nu0[i];
            let rows: [&[f64]; NR] = core::array::from_fn(|ir| {
                let base = (ir * (l + 1) + ell) * nj;
                &self.rows[base..base + nj]
            });
            let (mut ms, mut ks) = (0.0, 0.0);
            let mut u = [ZERO; NR];
            for j in 0..nj {
                let k2 = nodes[j] * nodes[j];
                let init = reg[j] - v0 * (shell[j] / (k2 + lam));
                let psi = phase[j] * init - I * acc[j] * shell[j];
                let a = weights[j] * k2 * psi.norm_sqr();
                ms += a;
                ks += a * k2;
                for ir in 0..NR {
                    u[ir] += psi * rows[ir][j];
                }
            }
            out[0] = Complex64::new(ms, 0.0);
            out[1] = Complex64::new(ks, 0.0);
            out[2..W].copy_from_slice(&u);
        });
        let nl = prop.nonlinearity();
        let nu = st.nu.coefficients();
        let q = st.q.coefficients();
        let (mut ms, mut ks) = (0.0, 0.0);
        let (mut jump2, mut tr2) = (0.0, 0.0);
        for i in 0..nm {
            let ell = ell_of(i);
            let v = nu[i];
            ms += sums[W * i].re + prop.tail_c(ell) * v.norm_sqr();
            ks += sums[W * i + 1].re + prop.tail_a(ell) * v.norm_sqr();
            let u: [Complex64; NR] = core::array::from_fn(|ir| {
                sums[W * i + 2 + ir] - v * self.tails[ir * (l + 1) + ell]
            });
            jump2 += (derivative_jump(&u, self.h) - v).norm_sqr();
            tr2 += (u[0] - q[i]).norm_sqr();
        }
        let pot = nl.potential(&st.q)?;
        let field = sht_synthesis(&st.q, nl.grid())?;
        Ok(DiagnosticsRecord {
            t: st.t,
            mass: ms,
            kinetic: ks,
            potential: pot,
            energy: ks + pot,
            q_h32: sobolev_norm(&st.q, 1.5),
            q_sup: lp_norm(&field, f64::INFINITY)?,
            jump_residual: relative(jump2.sqrt(), l2(&st.nu)),
            trace_residual: relative(tr2.sqrt(), l2(&st.q)),
            picard_ratio: st.picard_ratio,
        })
    }
}

/// Jump-condition residual of `psi` against `ν(q)` with offset
/// [`JUMP_OFFSET`].
pub fn jump_residual(psi: &RadialSpectrum, q: &ChargeSpectrum, nl: &Nonlinearity) -> Result<f64> {
    let obs = Observer::new(psi.grid(), psi.band_limit(), JUMP_OFFSET)?;
    Ok(obs.jump_residual(psi, &nl.apply(q)?))
}

/// One-off diagnostics of `st` (builds a fresh [`Observer`]).
pub fn diagnostics(
    prop: &Propagator,
    st: &SolverState,
    exec: &dyn ModeExecutor,
) -> Result<DiagnosticsRecord> {
    Observer::new(prop.grid(), prop.band_limit(), JUMP_OFFSET)?.record(prop, st, exec)
}
