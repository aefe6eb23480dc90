//! Scenario setup and the streaming run driver.

use std::f64::consts::PI;
use std::io::{self, BufWriter, Write};
use std::sync::Arc;

use num_complex::Complex64;
use shellnls_core::domain::{
    assemble_initial_state_with, bound_state_data, bound_state_lambda, regular_part, Coupling,
    InitialData, RadialProfile,
};
use shellnls_core::error::Error as CoreError;
use shellnls_core::kernels::{build_kernel_quadrature_with, default_k_max};
use shellnls_core::propagator::{run_with, ModeExecutor, Propagator, RunOptions, SolverConfig};

use crate::config::{RunConfig, Scenario};
use crate::output::{snapshot_path, write_spectrum_csv, JsonlWriter, Trailer};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("solver: {0}")]
    Solver(#[from] CoreError),
    #[error("I/O: {0}")]
    Io(#[from] io::Error),
    #[error("configuration: {0}")]
    Config(String),
}

/// Exit status of a finished run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Completed,
    EarlyStop,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Self::Completed => 0,
            Self::EarlyStop => 2,
        }
    }
}

pub fn coupling(cfg: &RunConfig) -> Coupling {
    if cfg.linear {
        Coupling::Linear { alpha: cfg.alpha }
    } else {
        Coupling::Power {
            beta: cfg.beta,
            sigma: cfg.sigma,
        }
    }
}

/// Certified kernel, initial data and solver settings of `cfg`.
pub fn prepare(cfg: &RunConfig) -> Result<(InitialData, SolverConfig), RunError> {
    let k_max = cfg.k_max.unwrap_or_else(|| default_k_max(cfg.l));
    let horizon = cfg.t.max(2.0 * cfg.dt);
    let kq = Arc::new(build_kernel_quadrature_with(
        cfg.l,
        cfg.dt,
        horizon,
        cfg.kernel_tol,
        k_max,
    )?);
    let grid = kq.grid().clone();
    let profiles = cfg.effective_profiles();
    let data = if cfg.scenario == Scenario::BoundState {
        if !cfg.linear || cfg.alpha != -2.0 {
            return Err(RunError::Config(
                "bound-state needs the linear coupling alpha = -2".into(),
            ));
        }
        let p = &profiles[0];
        bound_state_data(
            cfg.l,
            grid,
            Complex64::new(p.amplitude_re, p.amplitude_im),
            cfg.lambda0,
        )?
    } else {
        let radial: Vec<RadialProfile> = profiles
            .iter()
            .map(|p| RadialProfile {
                power: p.power,
                ..RadialProfile::gaussian(
                    p.ell,
                    p.m,
                    Complex64::new(p.amplitude_re, p.amplitude_im),
                    p.width,
                    p.center,
                )
            })
            .collect();
        let phi = regular_part(&radial, cfg.l, grid)?;
        assemble_initial_state_with(phi, coupling(cfg), cfg.lambda0)?
    };
    let mut sc = SolverConfig::new(cfg.dt, cfg.t, kq);
    sc.picard_tol = cfg.picard_tol;
    sc.picard_max = cfg.picard_max;
    sc.method = cfg.method.into();
    sc.validate()?;
    Ok((data, sc))
}

/// Phase-rotation tracking of `q_{0,0}` for the bound state.
struct Rotation {
    q0: Complex64,
    prev: f64,
    unwrapped: f64,
    modulus_drift: f64,
}

impl Rotation {
    fn push(&mut self, q: Complex64) {
        let a = (q / self.q0).arg();
        self.unwrapped += (a - self.prev + PI).rem_euclid(2.0 * PI) - PI;
        self.prev = a;
        self.modulus_drift = self
            .modulus_drift
            .max((q.norm() - self.q0.norm()).abs() / self.q0.norm());
    }
}

/// Runs `cfg`, streaming diagnostics to `out` and snapshots beside the
/// configured path.
pub fn run_to<W: Write>(
    cfg: &RunConfig,
    exec: &dyn ModeExecutor,
    out: &mut JsonlWriter<W>,
) -> Result<(Status, Trailer), RunError> {
    out.header(cfg)?;
    for w in &cfg.warnings {
        out.warning(w)?;
    }
    let (data, sc) = prepare(cfg)?;
    let prop = Propagator::new(&data, sc, exec)?;
    let opts = RunOptions {
        diagnostics_stride: cfg.diagnostics_stride,
        snapshot_stride: None,
    };
    let mut io_err: Option<io::Error> = None;
    let mut source_gap = 0.0f64;
    let mut rot = Rotation {
        q0: data.q0.get(0, 0).unwrap_or_default(),
        prev: 0.0,
        unwrapped: 0.0,
        modulus_drift: 0.0,
    };
    let mut last_t = 0.0;
    let tr = run_with(&prop, exec, opts, |prop, st, rec| {
        last_t = st.t;
        if let Some(r) = rec {
            if let Err(e) = out.record(r) {
                io_err.get_or_insert(e);
            }
        }
        if let Some(base) = &cfg.snapshots {
            if st.n % cfg.snapshot_stride == 0 || st.n == prop.steps() {
                let res = std::fs::File::create(snapshot_path(base, st.n))
                    .and_then(|f| write_spectrum_csv(BufWriter::new(f), &st.q));
                if let Err(e) = res {
                    io_err.get_or_insert(e);
                }
            }
        }
        match cfg.scenario {
            Scenario::Free => source_gap = source_gap.max(st.q.max_abs_diff(&prop.source(st.t)?)),
            Scenario::BoundState if rot.q0 != Complex64::default() => rot.push(st.q.get(0, 0)?),
            _ => {}
        }
        Ok(())
    })?;
    if let Some(e) = io_err {
        return Err(e.into());
    }

    let drift = |f: fn(&shellnls_core::observables::DiagnosticsRecord) -> f64| {
        let r0 = f(&tr.records[0]);
        tr.records
            .iter()
            .map(|r| (f(r) - r0).abs() / r0.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    };
    let mut trailer = Trailer {
        completed: tr.early_stop.is_none(),
        steps: tr.steps_taken,
        early_stop: tr.early_stop.as_ref().map(|e| e.to_string()),
        mass_drift: drift(|r| r.mass),
        energy_drift: drift(|r| r.energy),
        checks: Default::default(),
    };
    match cfg.scenario {
        Scenario::Free => {
            trailer.checks.insert("free_source_gap".into(), source_gap);
        }
        Scenario::BoundState if last_t > 0.0 => {
            let star = bound_state_lambda();
            let rate = rot.unwrapped / last_t;
            trailer.checks.insert("bound_lambda_star".into(), star);
            trailer.checks.insert("bound_phase_rate".into(), rate);
            trailer
                .checks
                .insert("bound_phase_rate_error".into(), (rate - star).abs() / star);
            trailer
                .checks
                .insert("bound_modulus_drift".into(), rot.modulus_drift);
        }
        _ => {}
    }
    out.trailer(&trailer)?;
    let status = if trailer.completed {
        Status::Completed
    } else {
        Status::EarlyStop
    };
    Ok((status, trailer))
}

/// Runs `cfg` into its configured diagnostics file.
pub fn run_scenario(
    cfg: &RunConfig,
    exec: &dyn ModeExecutor,
) -> Result<(Status, Trailer), RunError> {
    let mut out = JsonlWriter::create(&cfg.diagnostics)?;
    let res = run_to(cfg, exec, &mut out);
    out.finish()?;
    res
}
