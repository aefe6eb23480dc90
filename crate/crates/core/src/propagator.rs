//! Charge-equation stepper for `q(t) + iΛν(q)(t) = F₀(t)`.
//!
//! Λ is evaluated two ways. The frequency path keeps accumulators
//! `H̄_{ℓ,m,j}(t) = ∫₀ᵗ e^{−ik_j²(t−s)} ν_{ℓ,m}(s) ds` on the kernel grid and
//! models `[K, ∞)` as `A_ℓ ν(t) + C_ℓ ν'(t) − B_ℓ(t) ν(0)`, with
//! `A_ℓ = −i∫_K^∞ J²/k`, `C_ℓ = ∫_K^∞ J²/k³`, `B_ℓ(t) = ∫_K^∞ kJ² e^{−ik²t}/(ik²)`.
//! The direct path convolves the full `ν` history with lag-panel weights of
//! the closed-form `ρ`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::domain::{Coupling, InitialData, Nonlinearity};
use crate::error::{Error, Result};
use crate::hankel::{kernel_table, RadialGrid};
use crate::kernels::{f2, KernelQuadrature};
use crate::observables::{DiagnosticsRecord, Observer, JUMP_OFFSET};
use crate::sphgrid::{lm_index, sobolev_norm, spectrum_len, ChargeSpectrum};
use crate::tail::{inverse_power_tail, tail_integral};
use crate::timequad::{hat_weights, lag_weight_table};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const PHASE_REFRESH: usize = 64;

/// Which evaluation of Λ drives the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Direct,
    Freq,
    /// Frequency path drives; the direct path is evaluated alongside.
    Both,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_final: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub method: Method,
    pub kernel: Arc<KernelQuadrature>,
    /// Absolute tolerance per lag-panel weight of the direct path.
    pub direct_tol: f64,
}

impl SolverConfig {
    pub fn new(dt: f64, t_final: f64, kernel: Arc<KernelQuadrature>) -> Self {
        Self {
            dt,
            t_final,
            picard_tol: 1e-12,
            picard_max: 50,
            method: Method::Freq,
            kernel,
            direct_tol: 1e-12,
        }
    }

    /// Number of steps to reach `t_final`.
    pub fn steps(&self) -> usize {
        ((self.t_final / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(crate::error::domain("dt", self.dt, "must be positive"));
        }
        if !(self.t_final >= self.dt) || !self.t_final.is_finite() {
            return Err(crate::error::domain(
                "T",
                self.t_final,
                "must be at least dt",
            ));
        }
        if !(self.picard_tol > 0.0) || self.picard_max == 0 {
            return Err(Error::Precondition(
                "picard_tol and picard_max must be positive",
            ));
        }
        if self.kernel.tau_min() > self.dt * (1.0 + 1e-12) {
            return Err(Error::Precondition("kernel tau_min exceeds dt"));
        }
        if self.kernel.t_horizon() < self.steps() as f64 * self.dt * (1.0 - 1e-12) {
            return Err(Error::Precondition("kernel not certified through T"));
        }
        Ok(())
    }
}

/// Runs a closure over disjoint chunks of a buffer, one per mode.
pub trait ModeExecutor: Sync {
    /// Calls `f(i, &mut data[i·chunk..(i+1)·chunk], &mut out[i])` for every
    /// `i < out.len()`.
    fn for_each_chunk(
        &self,
        data: &mut [Complex64],
        chunk: usize,
        out: &mut [Complex64],
        f: &(dyn Fn(usize, &mut [Complex64], &mut Complex64) + Sync),
    );
}

/// In-order single-threaded executor.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl ModeExecutor for Sequential {
    fn for_each_chunk(
        &self,
        data: &mut [Complex64],
        chunk: usize,
        out: &mut [Complex64],
        f: &(dyn Fn(usize, &mut [Complex64], &mut Complex64) + Sync),
    ) {
        if chunk == 0 {
            for (i, o) in out.iter_mut().enumerate() {
                f(i, &mut [], o);
            }
            return;
        }
        for (i, (c, o)) in data.chunks_mut(chunk).zip(out.iter_mut()).enumerate() {
            f(i, c, o);
        }
    }
}

/// `ℓ` of the flat index `ℓ² + ℓ + m`.
#[inline]
pub fn ell_of(index: usize) -> usize {
    let mut l = (index as f64).sqrt() as usize;
    while l * l > index {
        l -= 1;
    }
    while (l + 1) * (l + 1) <= index {
        l += 1;
    }
    l
}

/// Precomputed, immutable tables of one run.
#[derive(Debug, Clone)]
pub struct Propagator {
    cfg: SolverConfig,
    l: usize,
    lambda: f64,
    nl: Nonlinearity,
    grid: Arc<RadialGrid>,
    omega: Vec<f64>,
    e_step: Vec<Complex64>,
    w_old: Vec<Complex64>,
    w_new: Vec<Complex64>,
    /// `w_j k_j J²_ℓ(k_j)`, row per ℓ.
    c: Vec<f64>,
    /// `J_ℓ(k_j)/√k_j`, row per ℓ.
    shell: Vec<f64>,
    /// `c/(k²+λ)`, row per ℓ.
    g_f2: Vec<f64>,
    a_tail: Vec<f64>,
    c_tail: Vec<f64>,
    w_freq: Vec<Complex64>,
    /// `(mode, w_j k_j² shell φ̃_j)` truncated after the last non-zero node.
    reg: Vec<(usize, Vec<Complex64>)>,
    phi0: crate::hankel::RadialSpectrum,
    q0: ChargeSpectrum,
    nu0: ChargeSpectrum,
    nu0_bands: Vec<bool>,
    /// Lag weights `[near₀, far₀, …]`, row per ℓ.
    direct: Option<Vec<Complex64>>,
    steps: usize,
}

/// Solver state at `t_n`.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub n: usize,
    pub t: f64,
    pub q: ChargeSpectrum,
    pub nu: ChargeSpectrum,
    q_prev: ChargeSpectrum,
    nu_prev: ChargeSpectrum,
    acc: Vec<Complex64>,
    phase: Vec<Complex64>,
    b_tail: Vec<Complex64>,
    nu_hist: Vec<ChargeSpectrum>,
    q_hist: Vec<ChargeSpectrum>,
    pub lambda_freq: ChargeSpectrum,
    pub lambda_direct: Option<ChargeSpectrum>,
    pub picard_ratio: f64,
    pub picard_iterations: usize,
}

impl SolverState {
    /// `H̄_{ℓ,m,j}(t_n)` for one mode.
    pub fn accumulator(&self, ell: usize, m: i64) -> &[Complex64] {
        let n = self.phase.len();
        let i = lm_index(ell, m);
        &self.acc[i * n..(i + 1) * n]
    }

    /// `e^{−ik_j² t_n}`.
    pub fn phases(&self) -> &[Complex64] {
        &self.phase
    }

    /// Charges at every step (kept by the direct path only).
    pub fn charge_history(&self) -> &[ChargeSpectrum] {
        &self.q_hist
    }

    pub fn nu_history(&self) -> &[ChargeSpectrum] {
        &self.nu_hist
    }

    /// Largest per-mode `|Λ_direct − Λ_freq|` at `t_n`, when both exist.
    pub fn lambda_gap(&self) -> Option<f64> {
        self.lambda_direct
            .as_ref()
            .map(|d| d.max_abs_diff(&self.lambda_freq))
    }
}

fn l2(q: &ChargeSpectrum) -> f64 {
    q.coefficients()
        .iter()
        .map(|c| c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

impl Propagator {
    pub fn new(data: &InitialData, cfg: SolverConfig, exec: &dyn ModeExecutor) -> Result<Self> {
        cfg.validate()?;
        let l = data.band_limit();
        let kernel = cfg.kernel.clone();
        if kernel.band_limit() < l {
            return Err(Error::BandLimit {
                requested: l,
                available: kernel.band_limit(),
            });
        }
        let grid = kernel.grid().clone();
        let dgrid = data.phi0.grid();
        if !Arc::ptr_eq(&grid, dgrid) && **dgrid != *grid {
            return Err(Error::GridMismatch {
                expected: grid.len(),
                found: dgrid.len(),
            });
        }
        let nj = grid.len();
        let dt = cfg.dt;
        let lambda = data.lambda;
        let nodes = grid.nodes();
        let weights = grid.weights();
        let omega: Vec<f64> = nodes.iter().map(|k| k * k).collect();
        let e_step: Vec<Complex64> = omega
            .iter()
            .map(|w| Complex64::from_polar(1.0, -w * dt))
            .collect();
        let (w_old, w_new): (Vec<_>, Vec<_>) = omega.iter().map(|&w| hat_weights(w, dt)).unzip();

        let table = kernel_table(l, nodes);
        let mut shell = vec![0.0; (l + 1) * nj];
        for j in 0..nj {
            for ell in 0..=l {
                shell[ell * nj + j] = table[j * (l + 1) + ell];
            }
        }
        let mut c = vec![0.0; (l + 1) * nj];
        let mut g_f2 = vec![0.0; (l + 1) * nj];
        let mut a_tail = Vec::with_capacity(l + 1);
        let mut c_tail = Vec::with_capacity(l + 1);
        let mut w_freq = Vec::with_capacity(l + 1);
        let cut = grid.k_max();
        let tail_tol = kernel.tol() * 1e-3;
        for ell in 0..=l {
            let jsq = kernel.jsq(ell);
            let mut inv = 0.0;
            let mut wf = ZERO;
            for j in 0..nj {
                let cj = weights[j] * nodes[j] * jsq[j];
                c[ell * nj + j] = cj;
                g_f2[ell * nj + j] = cj / (omega[j] + lambda);
                inv += weights[j] * jsq[j] / nodes[j];
                wf += w_new[j] * cj;
            }
            let a = 1.0 / (2 * ell + 1) as f64 - inv;
            let ct = inverse_power_tail(ell, cut, 3.0, tail_tol)?;
            a_tail.push(a);
            c_tail.push(ct);
            w_freq.push(wf - I * a + ct / dt);
        }

        let mut reg = Vec::new();
        for i in 0..spectrum_len(l) {
            let ell = ell_of(i);
            let m = i as i64 - (ell * ell + ell) as i64;
            let mode = data.phi0.mode(ell, m);
            let Some(last) = mode.iter().rposition(|z| *z != ZERO) else {
                continue;
            };
            let row: Vec<Complex64> = (0..=last)
                .map(|j| mode[j] * (weights[j] * omega[j] * shell[ell * nj + j]))
                .collect();
            reg.push((i, row));
        }
        let nu0_bands: Vec<bool> = (0..=l)
            .map(|ell| {
                (-(ell as i64)..=ell as i64)
                    .any(|m| data.nu0.coefficients()[lm_index(ell, m)] != ZERO)
            })
            .collect();

        let steps = cfg.steps();
        let direct = if cfg.method == Method::Freq {
            None
        } else {
            let mut tab = vec![ZERO; (l + 1) * 2 * steps];
            let mut status = vec![ZERO; l + 1];
            let tol = cfg.direct_tol;
            exec.for_each_chunk(&mut tab, 2 * steps, &mut status, &|ell, row, st| {
                if lag_weight_table(ell, dt, steps, tol, row).is_err() {
                    *st = Complex64::new(f64::NAN, 0.0);
                }
            });
            if status.iter().any(|s| s.re.is_nan()) {
                return Err(Error::Convergence {
                    estimate: f64::NAN,
                    tolerance: tol,
                });
            }
            Some(tab)
        };

        Ok(Self {
            nl: Nonlinearity::new(data.coupling, l)?,
            cfg,
            l,
            lambda,
            grid,
            omega,
            e_step,
            w_old,
            w_new,
            c,
            shell,
            g_f2,
            a_tail,
            c_tail,
            w_freq,
            reg,
            phi0: data.phi0.clone(),
            q0: data.q0.clone(),
            nu0: data.nu0.clone(),
            nu0_bands,
            direct,
            steps,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn band_limit(&self) -> usize {
        self.l
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn shell(&self, ell: usize) -> &[f64] {
        let n = self.grid.len();
        &self.shell[ell * n..(ell + 1) * n]
    }

    /// `∫_K^∞ J²_{ℓ+1/2}/k`, including the grid defect of `∫₀^K`.
    pub fn tail_a(&self, ell: usize) -> f64 {
        self.a_tail[ell]
    }

    /// `∫_K^∞ J²_{ℓ+1/2}/k³`.
    pub fn tail_c(&self, ell: usize) -> f64 {
        self.c_tail[ell]
    }

    pub fn phi0(&self) -> &crate::hankel::RadialSpectrum {
        &self.phi0
    }

    pub fn nu0(&self) -> &ChargeSpectrum {
        &self.nu0
    }

    pub fn initial_state(&self) -> SolverState {
        let nm = spectrum_len(self.l);
        let nj = self.grid.len();
        let keep = self.direct.is_some();
        SolverState {
            n: 0,
            t: 0.0,
            q: self.q0.clone(),
            nu: self.nu0.clone(),
            q_prev: self.q0.clone(),
            nu_prev: self.nu0.clone(),
            acc: vec![ZERO; nm * nj],
            phase: vec![Complex64::new(1.0, 0.0); nj],
            b_tail: vec![ZERO; self.l + 1],
            nu_hist: if keep {
                vec![self.nu0.clone()]
            } else {
                Vec::new()
            },
            q_hist: if keep {
                vec![self.q0.clone()]
            } else {
                Vec::new()
            },
            lambda_freq: ChargeSpectrum::zeros(self.l),
            lambda_direct: if keep {
                Some(ChargeSpectrum::zeros(self.l))
            } else {
                None
            },
            picard_ratio: 0.0,
            picard_iterations: 0,
        }
    }

    fn tail_tol(&self) -> f64 {
        self.cfg.kernel.tol() * 1e-3
    }

    /// `B_ℓ(t)` for every band where `ν(q₀)` is non-zero.
    fn b_tails(&self, t: f64) -> Result<Vec<Complex64>> {
        let cut = self.grid.k_max();
        (0..=self.l)
            .map(|ell| {
                if !self.nu0_bands[ell] {
                    return Ok(ZERO);
                }
                tail_integral(ell, cut, t, |z| 1.0 / (I * z * z), self.tail_tol())
            })
            .collect()
    }

    /// `F₀(t)` from the given phases `e^{−ik_j² t}`.
    fn source_with(&self, phase: &[Complex64], t: f64) -> Result<ChargeSpectrum> {
        let mut f = ChargeSpectrum::zeros(self.l);
        let out = f.coefficients_mut();
        for (i, row) in &self.reg {
            out[*i] = row.iter().zip(phase).map(|(r, p)| r * p).sum();
        }
        let nj = self.grid.len();
        let cut = self.grid.k_max();
        let lam = self.lambda;
        for ell in 0..=self.l {
            if !self.nu0_bands[ell] {
                continue;
            }
            let g = &self.g_f2[ell * nj..(ell + 1) * nj];
            let body: Complex64 = g.iter().zip(phase).map(|(g, p)| p * g).sum();
            let tail = tail_integral(ell, cut, t, |z| 1.0 / (z * z + lam), self.tail_tol())?;
            let f2 = body + tail;
            for m in -(ell as i64)..=ell as i64 {
                let i = lm_index(ell, m);
                out[i] -= f2 * self.nu0.coefficients()[i];
            }
        }
        Ok(f)
    }

    /// `F₀(t)` with exactly evaluated phases.
    pub fn source(&self, t: f64) -> Result<ChargeSpectrum> {
        let phase: Vec<Complex64> = self
            .omega
            .iter()
            .map(|w| Complex64::from_polar(1.0, -w * t))
            .collect();
        self.source_with(&phase, t)
    }

    /// Frequency-path `Λν(t_n)` rebuilt from the accumulators of `state`.
    pub fn apply_lambda_freq(&self, state: &SolverState, ell: usize, m: i64) -> Complex64 {
        if state.n == 0 {
            return ZERO;
        }
        let nj = self.grid.len();
        let i = lm_index(ell, m);
        let c = &self.c[ell * nj..(ell + 1) * nj];
        let s: Complex64 = c
            .iter()
            .zip(state.accumulator(ell, m))
            .map(|(c, h)| h * c)
            .sum();
        let nu = state.nu.coefficients()[i];
        let slope = (nu - state.nu_prev.coefficients()[i]) / self.cfg.dt;
        s - I * self.a_tail[ell] * nu + slope * self.c_tail[ell]
            - state.b_tail[ell] * self.nu0.coefficients()[i]
    }

    /// Direct-path `Λν(t_n)` from the stored ν history.
    pub fn apply_lambda_direct(
        &self,
        state: &SolverState,
        ell: usize,
        m: i64,
    ) -> Result<Complex64> {
        let tab = self
            .direct
            .as_ref()
            .ok_or(Error::Precondition("direct path disabled for this run"))?;
        let i = lm_index(ell, m);
        let row = &tab[ell * 2 * self.steps..(ell + 1) * 2 * self.steps];
        let n = state.n;
        let h = &state.nu_hist;
        let mut s = ZERO;
        for p in 0..n {
            s += row[2 * p] * h[n - p].coefficients()[i]
                + row[2 * p + 1] * h[n - p - 1].coefficients()[i];
        }
        Ok(s)
    }

    /// Advances `state` by one step.
    pub fn step(&self, st: &mut SolverState, exec: &dyn ModeExecutor) -> Result<()> {
        if st.n >= self.steps {
            return Err(Error::Precondition("horizon reached"));
        }
        let dt = self.cfg.dt;
        let n1 = st.n + 1;
        let t1 = n1 as f64 * dt;
        let nj = self.grid.len();
        let nm = spectrum_len(self.l);

        if n1.is_multiple_of(PHASE_REFRESH) {
            for (p, w) in st.phase.iter_mut().zip(&self.omega) {
                *p = Complex64::from_polar(1.0, -w * t1);
            }
        } else {
            for (p, e) in st.phase.iter_mut().zip(&self.e_step) {
                *p *= e;
            }
        }
        let f = self.source_with(&st.phase, t1)?;
        let b = self.b_tails(t1)?;

        // History part of the frequency path; accumulators become
        // E·H̄_n + α·ν_n in place.
        let mut p_freq = vec![ZERO; nm];
        {
            let nu_n = st.nu.coefficients();
            let (c, e, wo) = (&self.c, &self.e_step, &self.w_old);
            exec.for_each_chunk(&mut st.acc, nj, &mut p_freq, &|i, acc, out| {
                let ell = ell_of(i);
                let cr = &c[ell * nj..(ell + 1) * nj];
                let v = nu_n[i];
                let mut s = ZERO;
                for j in 0..nj {
                    let g = e[j] * acc[j] + wo[j] * v;
                    acc[j] = g;
                    s += g * cr[j];
                }
                *out = s;
            });
        }
        for (i, p) in p_freq.iter_mut().enumerate() {
            let ell = ell_of(i);
            *p += -b[ell] * self.nu0.coefficients()[i]
                - st.nu.coefficients()[i] * (self.c_tail[ell] / dt);
        }

        let p_direct = match &self.direct {
            None => None,
            Some(tab) => {
                let h = &st.nu_hist;
                let n = st.n;
                let mut out = vec![ZERO; nm];
                for (i, o) in out.iter_mut().enumerate() {
                    let ell = ell_of(i);
                    let row = &tab[ell * 2 * self.steps..(ell + 1) * 2 * self.steps];
                    let mut s = row[1] * h[n].coefficients()[i];
                    for p in 1..=n {
                        s += row[2 * p] * h[n + 1 - p].coefficients()[i]
                            + row[2 * p + 1] * h[n - p].coefficients()[i];
                    }
                    *o = s;
                }
                Some(out)
            }
        };

        let w_direct: Option<Vec<Complex64>> = self
            .direct
            .as_ref()
            .map(|tab| (0..=self.l).map(|ell| tab[ell * 2 * self.steps]).collect());
        let (hist, weight): (&[Complex64], Vec<Complex64>) = match (self.cfg.method, &p_direct) {
            (Method::Direct, Some(pd)) => (pd, w_direct.clone().unwrap_or_default()),
            _ => (&p_freq, self.w_freq.clone()),
        };

        let (q, ratio, iters) = self.solve(st, &f, hist, &weight)?;
        let nu = self.nl.apply(&q)?;

        {
            let nu1 = nu.coefficients();
            let wn = &self.w_new;
            let mut dummy = vec![ZERO; nm];
            exec.for_each_chunk(&mut st.acc, nj, &mut dummy, &|i, acc, _| {
                let v = nu1[i];
                if v != ZERO {
                    for j in 0..nj {
                        acc[j] += wn[j] * v;
                    }
                }
            });
        }

        let mut lf = ChargeSpectrum::zeros(self.l);
        for (i, z) in lf.coefficients_mut().iter_mut().enumerate() {
            *z = p_freq[i] + self.w_freq[ell_of(i)] * nu.coefficients()[i];
        }
        st.lambda_direct = match (&p_direct, &w_direct) {
            (Some(pd), Some(wd)) => {
                let mut ld = ChargeSpectrum::zeros(self.l);
                for (i, z) in ld.coefficients_mut().iter_mut().enumerate() {
                    *z = pd[i] + wd[ell_of(i)] * nu.coefficients()[i];
                }
                Some(ld)
            }
            _ => None,
        };
        st.lambda_freq = lf;
        st.b_tail = b;
        st.q_prev = core::mem::replace(&mut st.q, q);
        st.nu_prev = core::mem::replace(&mut st.nu, nu);
        if self.direct.is_some() {
            st.nu_hist.push(st.nu.clone());
            st.q_hist.push(st.q.clone());
        }
        st.n = n1;
        st.t = t1;
        st.picard_ratio = ratio;
        st.picard_iterations = iters;
        Ok(())
    }

    /// Solves `q = F − i(P + w_ℓ ν(q))`.
    fn solve(
        &self,
        st: &SolverState,
        f: &ChargeSpectrum,
        hist: &[Complex64],
        weight: &[Complex64],
    ) -> Result<(ChargeSpectrum, f64, usize)> {
        let rhs = |nu: Option<&ChargeSpectrum>| {
            let mut q = f.clone();
            for (i, z) in q.coefficients_mut().iter_mut().enumerate() {
                let mut lam = hist[i];
                if let Some(nu) = nu {
                    lam += weight[ell_of(i)] * nu.coefficients()[i];
                }
                *z -= I * lam;
            }
            q
        };
        match self.nl.coupling() {
            c if c.is_zero() => Ok((rhs(None), 0.0, 1)),
            Coupling::Linear { alpha } => {
                let mut q = rhs(None);
                for (i, z) in q.coefficients_mut().iter_mut().enumerate() {
                    *z /= 1.0 + I * alpha * weight[ell_of(i)];
                }
                Ok((q, 0.0, 1))
            }
            Coupling::Power { .. } => {
                let mut q = if st.n == 0 {
                    st.q.clone()
                } else {
                    let mut g = st.q.clone();
                    for (z, p) in g
                        .coefficients_mut()
                        .iter_mut()
                        .zip(st.q_prev.coefficients())
                    {
                        *z = *z * 2.0 - p;
                    }
                    g
                };
                let mut first = 0.0;
                let mut ratio = 0.0;
                for it in 1..=self.cfg.picard_max {
                    let next = rhs(Some(&self.nl.apply(&q)?));
                    let mut d = next.clone();
                    for (a, b) in d.coefficients_mut().iter_mut().zip(q.coefficients()) {
                        *a -= b;
                    }
                    let diff = l2(&d);
                    let size = l2(&next);
                    q = next;
                    if !diff.is_finite() {
                        break;
                    }
                    if it == 1 {
                        first = diff;
                    } else if it == 2 && first > 0.0 {
                        ratio = diff / first;
                    }
                    if diff <= self.cfg.picard_tol * size || size == 0.0 {
                        return Ok((q, ratio, it));
                    }
                }
                Err(Error::NonContraction {
                    iterations: self.cfg.picard_max,
                    ratio,
                })
            }
        }
    }

    /// Linear variant `ν(q) = αq` from any state of this propagator.
    pub fn step_linear(&self, st: &mut SolverState, exec: &dyn ModeExecutor) -> Result<()> {
        if !matches!(self.nl.coupling(), Coupling::Linear { .. }) {
            return Err(Error::Precondition("step_linear needs a linear coupling"));
        }
        self.step(st, exec)
    }
}

/// `F₀(t)` from first principles: exact phases on the data grid and the full
/// `f2` integral.
pub fn source_f0(data: &InitialData, t: f64, tol: f64) -> Result<ChargeSpectrum> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(crate::error::domain(
            "t",
            t,
            "must be finite and non-negative",
        ));
    }
    let l = data.band_limit();
    let grid = data.phi0.grid();
    let mut out = ChargeSpectrum::zeros(l);
    for ell in 0..=l {
        let w: Vec<Complex64> = grid
            .nodes()
            .iter()
            .zip(grid.weights())
            .map(|(&k, &w)| {
                let s = crate::hankel::shell_transform(ell, k).unwrap_or(0.0);
                Complex64::from_polar(w * k * k * s, -k * k * t)
            })
            .collect();
        let need_f2 =
            (-(ell as i64)..=ell as i64).any(|m| data.nu0.coefficients()[lm_index(ell, m)] != ZERO);
        let f2v = if need_f2 {
            f2(t, ell, data.lambda, tol)?
        } else {
            ZERO
        };
        for m in -(ell as i64)..=ell as i64 {
            let i = lm_index(ell, m);
            let reg: Complex64 = data
                .phi0
                .mode(ell, m)
                .iter()
                .zip(&w)
                .map(|(a, b)| a * b)
                .sum();
            out.coefficients_mut()[i] = reg - f2v * data.nu0.coefficients()[i];
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Diagnostics are computed every `stride` steps (and at the end).
    pub diagnostics_stride: usize,
    /// Charge snapshots every `stride` steps, if set.
    pub snapshot_stride: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            diagnostics_stride: 1,
            snapshot_stride: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<(f64, ChargeSpectrum)>,
    /// Per step, largest `|Λ_direct − Λ_freq|` over modes (method `both`).
    pub lambda_gaps: Vec<f64>,
    /// Set when the run stopped before the horizon.
    pub early_stop: Option<Error>,
    pub steps_taken: usize,
}

/// Steps from 0 to `T`, recording diagnostics; a non-contraction stops the
/// run early with the partial trajectory.
pub fn run(
    data: &InitialData,
    config: SolverConfig,
    exec: &dyn ModeExecutor,
    opts: RunOptions,
) -> Result<Trajectory> {
    let prop = Propagator::new(data, config, exec)?;
    run_with(&prop, exec, opts, |_, _, _| Ok(()))
}

/// As [`run`] on a prepared propagator; `observe` sees every state together
/// with its diagnostics record when one was taken.
pub fn run_with<F>(
    prop: &Propagator,
    exec: &dyn ModeExecutor,
    opts: RunOptions,
    mut observe: F,
) -> Result<Trajectory>
where
    F: FnMut(&Propagator, &SolverState, Option<&DiagnosticsRecord>) -> Result<()>,
{
    let stride = opts.diagnostics_stride.max(1);
    let observer = Observer::new(prop.grid(), prop.band_limit(), JUMP_OFFSET)?;
    let mut st = prop.initial_state();
    let mut tr = Trajectory {
        times: Vec::new(),
        records: Vec::new(),
        snapshots: Vec::new(),
        lambda_gaps: Vec::new(),
        early_stop: None,
        steps_taken: 0,
    };
    let record = |st: &SolverState, tr: &mut Trajectory, last: bool| -> Result<bool> {
        let taken = st.n.is_multiple_of(stride) || last;
        if taken {
            tr.times.push(st.t);
            tr.records.push(observer.record(prop, st, exec)?);
        }
        if let Some(s) = opts.snapshot_stride {
            if st.n.is_multiple_of(s.max(1)) || last {
                tr.snapshots.push((st.t, st.q.clone()));
            }
        }
        Ok(taken)
    };
    let taken = record(&st, &mut tr, false)?;
    observe(prop, &st, tr.records.last().filter(|_| taken))?;
    for n in 0..prop.steps() {
        match prop.step(&mut st, exec) {
            Ok(()) => {}
            Err(e @ Error::NonContraction { .. }) => {
                tr.early_stop = Some(e);
                break;
            }
            Err(e) => return Err(e),
        }
        tr.steps_taken = st.n;
        if let Some(g) = st.lambda_gap() {
            tr.lambda_gaps.push(g);
        }
        let last = n + 1 == prop.steps();
        let taken = record(&st, &mut tr, last)?;
        observe(prop, &st, tr.records.last().filter(|_| taken))?;
    }
    Ok(tr)
}

/// `‖q‖_{H^{3/2}}`.
pub fn charge_h32(q: &ChargeSpectrum) -> f64 {
    sobolev_norm(q, 1.5)
}
