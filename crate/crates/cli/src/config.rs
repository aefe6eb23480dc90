//! Run configuration: INI-style text with `[physics]`, `[numerics]`,
//! repeated `[initial.k]` blocks and `[output]`.

use std::fmt::{self, Write as _};
use std::path::PathBuf;

use serde::Serialize;
use shellnls_core::propagator::Method;

pub const DEFAULT_L: usize = 8;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_T: f64 = 1.0;
pub const DEFAULT_LAMBDA0: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {kind}")]
pub struct ConfigError {
    /// 1-based; 0 when the error concerns the whole file.
    pub line: usize,
    pub kind: ConfigErrorKind,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown section [{0}]")]
    UnknownSection(String),
    #[error("unknown key \"{key}\" in [{section}]")]
    UnknownKey { section: String, key: String },
    #[error("\"{key}\": expected {expected}, got \"{value}\"")]
    Type {
        key: String,
        expected: &'static str,
        value: String,
    },
    #[error("\"{key}\": {message}")]
    Constraint { key: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Free,
    BoundState,
    Defocusing,
    Focusing,
    Custom,
}

impl Scenario {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "free" => Self::Free,
            "bound-state" => Self::BoundState,
            "defocusing" => Self::Defocusing,
            "focusing" => Self::Focusing,
            "custom" => Self::Custom,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Free => "free",
            Self::BoundState => "bound-state",
            Self::Defocusing => "defocusing",
            Self::Focusing => "focusing",
            Self::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Direct,
    Freq,
    Both,
}

impl From<MethodName> for Method {
    fn from(m: MethodName) -> Self {
        match m {
            MethodName::Direct => Method::Direct,
            MethodName::Freq => Method::Freq,
            MethodName::Both => Method::Both,
        }
    }
}

/// One `[initial.k]` block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileConfig {
    pub kind: String,
    pub ell: usize,
    pub m: i64,
    pub amplitude_re: f64,
    pub amplitude_im: f64,
    /// Gaussian width `w`; the exponent is `−(r−c)²/(2w²)`.
    pub width: f64,
    pub center: f64,
    pub power: u32,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            kind: "gaussian".into(),
            ell: 0,
            m: 0,
            amplitude_re: 1.0,
            amplitude_im: 0.0,
            width: 1.0,
            center: 0.0,
            power: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub beta: f64,
    pub sigma: f64,
    /// Linear shell strength, used when `coupling = linear`.
    pub alpha: f64,
    pub linear: bool,
    pub lambda0: f64,
    #[serde(rename = "L")]
    pub l: usize,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub method: MethodName,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub kernel_tol: f64,
    /// `None` selects the default cutoff for `L`.
    pub k_max: Option<f64>,
    pub diagnostics_stride: usize,
    pub profiles: Vec<ProfileConfig>,
    pub diagnostics: PathBuf,
    pub snapshots: Option<PathBuf>,
    pub snapshot_stride: usize,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

impl RunConfig {
    /// Defaults of a scenario before any key is applied.
    pub fn preset(scenario: Scenario) -> Self {
        let mut c = Self {
            scenario,
            beta: 0.0,
            sigma: 0.5,
            alpha: 0.0,
            linear: false,
            lambda0: DEFAULT_LAMBDA0,
            l: DEFAULT_L,
            dt: DEFAULT_DT,
            t: DEFAULT_T,
            method: MethodName::Freq,
            picard_tol: 1e-12,
            picard_max: 50,
            kernel_tol: 1e-6,
            k_max: None,
            diagnostics_stride: 1,
            profiles: Vec::new(),
            diagnostics: PathBuf::from("diagnostics.jsonl"),
            snapshots: None,
            snapshot_stride: 100,
            warnings: Vec::new(),
        };
        match scenario {
            Scenario::Free | Scenario::Custom => {}
            Scenario::BoundState => {
                c.linear = true;
                c.alpha = -2.0;
            }
            Scenario::Defocusing => c.beta = 1.0,
            Scenario::Focusing => c.beta = -0.5,
        }
        c
    }

    /// Profiles in effect: the configured ones or the scenario default.
    pub fn effective_profiles(&self) -> Vec<ProfileConfig> {
        if !self.profiles.is_empty() {
            return self.profiles.clone();
        }
        let amp = match self.scenario {
            Scenario::Defocusing | Scenario::Focusing => 0.1,
            _ => 1.0,
        };
        vec![ProfileConfig {
            amplitude_re: amp,
            ..ProfileConfig::default()
        }]
    }

    /// Checks the cross-field constraints, reporting the key at fault.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, message: &str| ConfigError {
            line: 0,
            kind: ConfigErrorKind::Constraint {
                key: key.into(),
                message: message.into(),
            },
        };
        for (k, v) in [
            ("beta", self.beta),
            ("sigma", self.sigma),
            ("alpha", self.alpha),
            ("lambda0", self.lambda0),
        ] {
            if !v.is_finite() {
                return Err(bad(k, "must be finite"));
            }
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(bad("dt", "must be positive"));
        }
        if !(self.t >= self.dt) || !self.t.is_finite() {
            return Err(bad("T", "must be finite and at least dt"));
        }
        if !(self.lambda0 > 0.0) {
            return Err(bad("lambda0", "must be positive"));
        }
        if !(self.sigma > 0.0) {
            return Err(bad("sigma", "must be positive"));
        }
        if !(self.picard_tol > 0.0) || self.picard_max == 0 {
            return Err(bad(
                "picard_tol",
                "picard_tol and picard_max must be positive",
            ));
        }
        if !(self.kernel_tol > 0.0) {
            return Err(bad("kernel_tol", "must be positive"));
        }
        if let Some(k) = self.k_max {
            if !(k > 0.0) || !k.is_finite() {
                return Err(bad("k_max", "must be positive"));
            }
        }
        if self.diagnostics_stride == 0 || self.snapshot_stride == 0 {
            return Err(bad("stride", "must be at least 1"));
        }
        Ok(())
    }

    /// Resolved configuration in the same text format, parseable back.
    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[physics]");
        let _ = writeln!(s, "scenario = {}", self.scenario.name());
        let _ = writeln!(
            s,
            "coupling = {}",
            if self.linear { "linear" } else { "power" }
        );
        let _ = writeln!(s, "beta = {:?}", self.beta);
        let _ = writeln!(s, "sigma = {:?}", self.sigma);
        let _ = writeln!(s, "alpha = {:?}", self.alpha);
        let _ = writeln!(s, "lambda0 = {:?}", self.lambda0);
        let _ = writeln!(s, "\n[numerics]");
        let _ = writeln!(s, "L = {}", self.l);
        let _ = writeln!(s, "dt = {:?}", self.dt);
        let _ = writeln!(s, "T = {:?}", self.t);
        let _ = writeln!(s, "method = {}", self.method);
        let _ = writeln!(s, "picard_tol = {:?}", self.picard_tol);
        let _ = writeln!(s, "picard_max = {}", self.picard_max);
        let _ = writeln!(s, "kernel_tol = {:?}", self.kernel_tol);
        if let Some(k) = self.k_max {
            let _ = writeln!(s, "k_max = {k:?}");
        }
        let _ = writeln!(s, "diagnostics_stride = {}", self.diagnostics_stride);
        for (i, p) in self.effective_profiles().iter().enumerate() {
            let _ = writeln!(s, "\n[initial.{i}]");
            let _ = writeln!(s, "type = {}", p.kind);
            let _ = writeln!(s, "ell = {}", p.ell);
            let _ = writeln!(s, "m = {}", p.m);
            let _ = writeln!(s, "amplitude = {:?}", p.amplitude_re);
            let _ = writeln!(s, "amplitude_im = {:?}", p.amplitude_im);
            let _ = writeln!(s, "width = {:?}", p.width);
            let _ = writeln!(s, "center = {:?}", p.center);
            let _ = writeln!(s, "power = {}", p.power);
        }
        let _ = writeln!(s, "\n[output]");
        let _ = writeln!(s, "diagnostics = {}", self.diagnostics.display());
        if let Some(p) = &self.snapshots {
            let _ = writeln!(s, "snapshots = {}", p.display());
        }
        let _ = writeln!(s, "snapshot_stride = {}", self.snapshot_stride);
        s
    }
}

impl fmt::Display for MethodName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Direct => "direct",
            Self::Freq => "freq",
            Self::Both => "both",
        })
    }
}

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

fn type_err(e: &Entry, expected: &'static str) -> ConfigError {
    ConfigError {
        line: e.line,
        kind: ConfigErrorKind::Type {
            key: e.key.into(),
            expected,
            value: e.value.into(),
        },
    }
}

fn real(e: &Entry) -> Result<f64, ConfigError> {
    e.value.parse().map_err(|_| type_err(e, "a real number"))
}

fn natural(e: &Entry) -> Result<usize, ConfigError> {
    e.value
        .parse()
        .map_err(|_| type_err(e, "a non-negative integer"))
}

fn constraint(e: &Entry, message: &str) -> ConfigError {
    ConfigError {
        line: e.line,
        kind: ConfigErrorKind::Constraint {
            key: e.key.into(),
            message: message.into(),
        },
    }
}

fn unknown(e: &Entry, section: &str) -> ConfigError {
    ConfigError {
        line: e.line,
        kind: ConfigErrorKind::UnknownKey {
            section: section.into(),
            key: e.key.into(),
        },
    }
}

/// Parses and validates a configuration. Comments start with `#` or `;`.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    // Sections with their entries, in file order.
    let mut sections: Vec<(usize, String, Vec<Entry>)> = vec![(0, String::new(), Vec::new())];
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.split(['#', ';']).next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or(ConfigError {
                line,
                kind: ConfigErrorKind::Syntax("unterminated section header".into()),
            })?;
            sections.push((line, name.trim().to_string(), Vec::new()));
            continue;
        }
        let (key, value) = s.split_once('=').ok_or(ConfigError {
            line,
            kind: ConfigErrorKind::Syntax(format!("expected key = value, got \"{s}\"")),
        })?;
        let value = value.trim().trim_matches('"');
        sections.last_mut().expect("root section").2.push(Entry {
            line,
            key: key.trim(),
            value,
        });
    }

    // The scenario fixes the defaults, so it is resolved first.
    let mut scenario = Scenario::Free;
    for (_, name, entries) in &sections {
        if name.is_empty() || name == "physics" {
            for e in entries.iter().filter(|e| e.key == "scenario") {
                scenario = Scenario::parse(e.value)
                    .ok_or_else(|| type_err(e, "free|bound-state|defocusing|focusing|custom"))?;
            }
        }
    }
    let mut cfg = RunConfig::preset(scenario);
    let mut seen_sigma: Option<usize> = None;

    for (header_line, name, entries) in &sections {
        match name.as_str() {
            "" | "physics" => {
                for e in entries {
                    match e.key {
                        "scenario" => {}
                        "beta" => cfg.beta = real(e)?,
                        "sigma" => {
                            cfg.sigma = real(e)?;
                            seen_sigma = Some(e.line);
                        }
                        "alpha" => cfg.alpha = real(e)?,
                        "lambda0" => cfg.lambda0 = real(e)?,
                        "coupling" => {
                            cfg.linear = match e.value {
                                "linear" => true,
                                "power" => false,
                                _ => return Err(type_err(e, "linear|power")),
                            }
                        }
                        _ => {
                            return Err(unknown(
                                e,
                                if name.is_empty() { "(top level)" } else { name },
                            ))
                        }
                    }
                }
            }
            "numerics" => {
                for e in entries {
                    match e.key {
                        "L" => cfg.l = natural(e)?,
                        "dt" => {
                            cfg.dt = real(e)?;
                            if !(cfg.dt > 0.0) || !cfg.dt.is_finite() {
                                return Err(constraint(e, "must be positive"));
                            }
                        }
                        "T" => {
                            cfg.t = real(e)?;
                            if !(cfg.t > 0.0) || !cfg.t.is_finite() {
                                return Err(constraint(e, "must be positive"));
                            }
                        }
                        "method" => {
                            cfg.method = match e.value {
                                "direct" => MethodName::Direct,
                                "freq" => MethodName::Freq,
                                "both" => MethodName::Both,
                                _ => return Err(type_err(e, "direct|freq|both")),
                            }
                        }
                        "picard_tol" => cfg.picard_tol = real(e)?,
                        "picard_max" => cfg.picard_max = natural(e)?,
                        "kernel_tol" => cfg.kernel_tol = real(e)?,
                        "k_max" => cfg.k_max = Some(real(e)?),
                        "diagnostics_stride" => cfg.diagnostics_stride = natural(e)?,
                        _ => return Err(unknown(e, name)),
                    }
                }
            }
            "output" => {
                for e in entries {
                    match e.key {
                        "diagnostics" => cfg.diagnostics = PathBuf::from(e.value),
                        "snapshots" => cfg.snapshots = Some(PathBuf::from(e.value)),
                        "snapshot_stride" => cfg.snapshot_stride = natural(e)?,
                        _ => return Err(unknown(e, name)),
                    }
                }
            }
            s if s.starts_with("initial.") => {
                let mut p = ProfileConfig::default();
                let mut width_line = None;
                for e in entries {
                    match e.key {
                        "type" => {
                            if e.value != "gaussian" {
                                return Err(type_err(e, "gaussian"));
                            }
                            p.kind = e.value.into();
                        }
                        "ell" => p.ell = natural(e)?,
                        "m" => p.m = e.value.parse().map_err(|_| type_err(e, "an integer"))?,
                        "amplitude" => p.amplitude_re = real(e)?,
                        "amplitude_im" => p.amplitude_im = real(e)?,
                        "width" => {
                            p.width = real(e)?;
                            width_line = Some(e);
                        }
                        "rate" => {
                            let r = real(e)?;
                            if !(r > 0.0) || !r.is_finite() {
                                return Err(constraint(e, "must be positive"));
                            }
                            p.width = (0.5 / r).sqrt();
                        }
                        "center" => p.center = real(e)?,
                        "power" => {
                            p.power = e
                                .value
                                .parse()
                                .map_err(|_| type_err(e, "a non-negative integer"))?
                        }
                        _ => return Err(unknown(e, name)),
                    }
                }
                if let Some(e) = width_line {
                    if !(p.width > 0.0) || !p.width.is_finite() {
                        return Err(constraint(e, "must be positive"));
                    }
                }
                if p.m.unsigned_abs() as usize > p.ell {
                    return Err(ConfigError {
                        line: *header_line,
                        kind: ConfigErrorKind::Constraint {
                            key: "m".into(),
                            message: format!("|m| must not exceed ell = {}", p.ell),
                        },
                    });
                }
                cfg.profiles.push(p);
            }
            other => {
                return Err(ConfigError {
                    line: *header_line,
                    kind: ConfigErrorKind::UnknownSection(other.into()),
                })
            }
        }
    }

    for p in &cfg.profiles {
        if p.ell > cfg.l {
            return Err(ConfigError {
                line: 0,
                kind: ConfigErrorKind::Constraint {
                    key: "ell".into(),
                    message: format!("profile degree {} exceeds L = {}", p.ell, cfg.l),
                },
            });
        }
    }
    cfg.validate().map_err(|mut e| {
        if let ConfigErrorKind::Constraint { key, .. } = &e.kind {
            e.line = locate(text, key);
        }
        e
    })?;
    if cfg.sigma < 0.5 && !cfg.linear {
        cfg.warnings.push(match seen_sigma {
            Some(line) => format!("line {line}: sigma below paper regime 1/2"),
            None => "sigma below paper regime 1/2".into(),
        });
    }
    Ok(cfg)
}

/// Line of the last assignment to `key`, or 0.
fn locate(text: &str, key: &str) -> usize {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            l.split(['#', ';'])
                .next()
                .and_then(|s| s.split_once('='))
                .is_some_and(|(k, _)| k.trim() == key)
        })
        .map(|(i, _)| i + 1)
        .last()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config("scenario = free\n").unwrap();
        assert_eq!(c.scenario, Scenario::Free);
        assert_eq!((c.l, c.dt, c.t, c.lambda0), (8, 1e-3, 1.0, 1.0));
        assert!(c.warnings.is_empty());
    }

    #[test]
    fn zero_dt_names_dt() {
        let e = parse_config("[numerics]\ndt = 0\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(matches!(&e.kind, ConfigErrorKind::Constraint { key, .. } if key == "dt"));
        assert!(e.to_string().contains("dt"));
    }

    #[test]
    fn low_sigma_warns() {
        let c = parse_config("[physics]\nscenario = custom\nbeta = 1\nsigma = 0.3\n").unwrap();
        assert_eq!(
            c.warnings,
            vec!["line 4: sigma below paper regime 1/2".to_string()]
        );
    }

    #[test]
    fn errors_are_line_tagged() {
        let e = parse_config("[physics]\nbeta = 1\nbogus = 2\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(matches!(e.kind, ConfigErrorKind::UnknownKey { .. }));
        let e = parse_config("[numerics]\n\nL = eight\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(matches!(e.kind, ConfigErrorKind::Type { .. }));
        let e = parse_config("[nope]\n").unwrap_err();
        assert_eq!(e.line, 1);
        let e = parse_config("x\n").unwrap_err();
        assert!(matches!(e.kind, ConfigErrorKind::Syntax(_)));
        let e = parse_config("[numerics]\ndt = 0.1\nT = 0.01\n").unwrap_err();
        assert_eq!(e.line, 3);
    }

    #[test]
    fn scenario_presets() {
        let c = parse_config("[physics]\nscenario = bound-state\n").unwrap();
        assert!(c.linear && c.alpha == -2.0);
        let c = parse_config("scenario = defocusing\n[physics]\nbeta = 2\n").unwrap();
        assert_eq!((c.beta, c.sigma), (2.0, 0.5));
        assert_eq!(c.effective_profiles()[0].amplitude_re, 0.1);
    }

    #[test]
    fn initial_blocks() {
        let text = "[initial.0]\nell = 2\nm = -1\namplitude = 0.5\namplitude_im = 0.25\nrate = 2\n\
                    [initial.1]\nwidth = 0.5\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.profiles.len(), 2);
        assert_eq!((c.profiles[0].ell, c.profiles[0].m), (2, -1));
        assert!((c.profiles[0].width - 0.5).abs() < 1e-15);
        assert_eq!(c.profiles[1].width, 0.5);
        let e = parse_config("[initial.0]\nell = 1\nm = 2\n").unwrap_err();
        assert_eq!(e.line, 1);
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = parse_config("scenario = defocusing\n[numerics]\nL = 4\nmethod = both\n[output]\nsnapshots = s.csv\n").unwrap();
        let again = parse_config(&c.to_ini()).unwrap();
        assert_eq!(again.profiles, c.effective_profiles());
        assert_eq!(again.to_ini(), c.to_ini());
    }
}
