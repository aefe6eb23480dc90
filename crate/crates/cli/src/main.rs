use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use shellnls::config::{parse_config, RunConfig, Scenario};
use shellnls::exec::Threaded;
use shellnls::scenario::run_scenario;
use shellnls::verify::{verify, Level};

/// Spectral simulator for the Schrödinger equation with a nonlinearity on
/// the unit sphere.
#[derive(Debug, Parser)]
#[command(name = "shellnls", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Time step (overrides the config).
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Final time (overrides the config).
    #[arg(long = "T", global = true)]
    t: Option<f64>,
    /// Band limit (overrides the config).
    #[arg(long = "L", global = true)]
    l: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Runs the scenario described by a config file.
    Run { config: PathBuf },
    /// Runs the oracle suites and prints a pass/fail table.
    Verify {
        /// Acceptance-size problems and refinement studies.
        #[arg(long)]
        full: bool,
    },
    /// Prints the resolved configuration (defaults filled in).
    PrintConfig { config: Option<PathBuf> },
}

fn load(path: Option<&Path>, cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            parse_config(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => RunConfig::preset(Scenario::Free),
    };
    if let Some(dt) = cli.dt {
        cfg.dt = dt;
    }
    if let Some(t) = cli.t {
        cfg.t = t;
    }
    if let Some(l) = cli.l {
        cfg.l = l;
    }
    cfg.validate().map_err(|e| e.kind.to_string())?;
    if let Some(p) = cfg.profiles.iter().find(|p| p.ell > cfg.l) {
        return Err(format!("profile degree {} exceeds L = {}", p.ell, cfg.l));
    }
    Ok(cfg)
}

fn executor() -> Result<Threaded, String> {
    Threaded::from_env().map_err(|e| format!("thread pool: {e}"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match real_main(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn real_main(cli: &Cli) -> Result<u8, String> {
    match &cli.command {
        Command::PrintConfig { config } => {
            let cfg = load(config.as_deref(), cli)?;
            for w in &cfg.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", cfg.to_ini());
            Ok(0)
        }
        Command::Run { config } => {
            let cfg = load(Some(config), cli)?;
            for w in &cfg.warnings {
                eprintln!("warning: {w}");
            }
            let exec = executor()?;
            let start = Instant::now();
            let (status, trailer) = run_scenario(&cfg, &exec).map_err(|e| e.to_string())?;
            eprintln!(
                "{}: {} steps in {:.1} s, mass drift {:.3e}, energy drift {:.3e} -> {}",
                cfg.scenario.name(),
                trailer.steps,
                start.elapsed().as_secs_f64(),
                trailer.mass_drift,
                trailer.energy_drift,
                cfg.diagnostics.display()
            );
            for (k, v) in &trailer.checks {
                eprintln!("  {k} = {v:e}");
            }
            if let Some(why) = &trailer.early_stop {
                eprintln!("stopped early: {why}");
            }
            Ok(status.code() as u8)
        }
        Command::Verify { full } => {
            let exec = executor()?;
            let level = if *full { Level::Full } else { Level::Fast };
            let start = Instant::now();
            let report = verify(level, &exec, |s| eprintln!("running {s}"));
            println!("{report}");
            eprintln!("verify finished in {:.1} s", start.elapsed().as_secs_f64());
            Ok(if report.passed() { 0 } else { 1 })
        }
    }
}
