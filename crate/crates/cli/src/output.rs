//! JSON Lines diagnostics and CSV charge snapshots.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use shellnls_core::observables::DiagnosticsRecord;
use shellnls_core::sphgrid::ChargeSpectrum;

use crate::config::RunConfig;

/// Serialized form of a [`DiagnosticsRecord`]; keys are the field names.
#[derive(Debug, Serialize)]
pub struct RecordLine {
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

impl From<&DiagnosticsRecord> for RecordLine {
    fn from(r: &DiagnosticsRecord) -> Self {
        Self {
            t: r.t,
            mass: r.mass,
            kinetic: r.kinetic,
            potential: r.potential,
            energy: r.energy,
            q_h32: r.q_h32,
            q_sup: r.q_sup,
            jump_residual: r.jump_residual,
            trace_residual: r.trace_residual,
            picard_ratio: r.picard_ratio,
        }
    }
}

#[derive(Debug, Serialize)]
struct Header<'a> {
    header: HeaderBody<'a>,
}

#[derive(Debug, Serialize)]
struct HeaderBody<'a> {
    program: &'static str,
    version: &'static str,
    config: &'a RunConfig,
}

#[derive(Debug, Serialize)]
struct Warning<'a> {
    warning: &'a str,
}

/// Closing record of a run.
#[derive(Debug, Default, Serialize)]
pub struct Trailer {
    pub completed: bool,
    pub steps: usize,
    pub early_stop: Option<String>,
    pub mass_drift: f64,
    pub energy_drift: f64,
    /// Scenario checks, `name → value`.
    pub checks: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize)]
struct TrailerLine<'a> {
    trailer: &'a Trailer,
}

/// Append-only JSONL writer.
pub struct JsonlWriter<W: Write> {
    out: W,
}

impl JsonlWriter<BufWriter<File>> {
    pub fn create(path: &Path) -> io::Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        Ok(Self::new(BufWriter::new(File::create(path)?)))
    }
}

impl<W: Write> JsonlWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    fn line<T: Serialize>(&mut self, v: &T) -> io::Result<()> {
        serde_json::to_writer(&mut self.out, v)?;
        self.out.write_all(b"\n")
    }

    pub fn header(&mut self, config: &RunConfig) -> io::Result<()> {
        self.line(&Header {
            header: HeaderBody {
                program: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                config,
            },
        })
    }

    pub fn warning(&mut self, text: &str) -> io::Result<()> {
        self.line(&Warning { warning: text })
    }

    pub fn record(&mut self, r: &DiagnosticsRecord) -> io::Result<()> {
        self.line(&RecordLine::from(r))
    }

    pub fn trailer(&mut self, t: &Trailer) -> io::Result<()> {
        self.line(&TrailerLine { trailer: t })
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Writes `q` as CSV with columns `ell,m,re,im`.
pub fn write_spectrum_csv<W: Write>(mut out: W, q: &ChargeSpectrum) -> io::Result<()> {
    writeln!(out, "ell,m,re,im")?;
    for (ell, m, z) in q.iter() {
        writeln!(out, "{ell},{m},{:?},{:?}", z.re, z.im)?;
    }
    Ok(())
}

/// File of the snapshot at step `n`: `<stem>_<n>.csv` beside `base`.
pub fn snapshot_path(base: &Path, n: usize) -> PathBuf {
    let stem = base
        .file_stem()
        .map_or("snapshot".into(), |s| s.to_string_lossy().into_owned());
    base.with_file_name(format!("{stem}_{n:07}.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn rec() -> DiagnosticsRecord {
        DiagnosticsRecord {
            t: 0.1,
            mass: 1.0 / 3.0,
            kinetic: 2.0,
            potential: -0.0,
            energy: 2.0,
            q_h32: 1e-300,
            q_sup: 0.5,
            jump_residual: 1e-6,
            trace_residual: 1e-9,
            picard_ratio: 0.0,
        }
    }

    #[test]
    fn record_keys_and_roundtrip() {
        let mut w = JsonlWriter::new(Vec::new());
        w.record(&rec()).unwrap();
        let s = String::from_utf8(w.finish().unwrap()).unwrap();
        let v: serde_json::Value = serde_json::from_str(s.trim()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        let mut want = vec![
            "t",
            "mass",
            "kinetic",
            "potential",
            "energy",
            "q_h32",
            "q_sup",
            "jump_residual",
            "trace_residual",
            "picard_ratio",
        ];
        let mut got = keys.clone();
        got.sort();
        want.sort();
        assert_eq!(got, want);
        assert_eq!(v["mass"].as_f64().unwrap(), 1.0 / 3.0);
        assert_eq!(v["q_h32"].as_f64().unwrap(), 1e-300);
        assert!(s.contains("\"mass\":0.3333333333333333,"));
    }

    #[test]
    fn csv_layout() {
        let mut q = ChargeSpectrum::zeros(1);
        q.set(1, -1, Complex64::new(0.25, -1e-20)).unwrap();
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &q).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "ell,m,re,im");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[2], "1,-1,0.25,-1e-20");
    }

    #[test]
    fn snapshot_names() {
        assert_eq!(
            snapshot_path(Path::new("out/q.csv"), 42),
            PathBuf::from("out/q_0000042.csv")
        );
    }
}
