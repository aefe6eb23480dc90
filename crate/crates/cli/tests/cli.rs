use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const RECORD_KEYS: [&str; 10] = [
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

fn shellnls(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_shellnls"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("SHELLNLS_THREADS", t),
        None => cmd.env_remove("SHELLNLS_THREADS"),
    };
    cmd.output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let out = dir.join(format!("{name}.jsonl"));
    let text = format!("{body}\n[output]\ndiagnostics = {}\n", out.display());
    let path = dir.join(format!("{name}.ini"));
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn lines(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

const SMALL: &str = "[physics]\nscenario = defocusing\n[numerics]\nL = 2\ndt = 1e-2\nT = 0.1\n";

#[test]
fn run_writes_header_records_trailer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a", SMALL);
    let out = shellnls(&["run", &cfg], Some("2"));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = lines(&dir.path().join("a.jsonl"));
    assert_eq!(v[0]["header"]["config"]["scenario"], "defocusing");
    assert_eq!(v[0]["header"]["config"]["L"], 2);
    let records = &v[1..v.len() - 1];
    assert_eq!(records.len(), 11);
    for r in records {
        let mut keys: Vec<&str> = r.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        keys.sort();
        let mut want = RECORD_KEYS.to_vec();
        want.sort();
        assert_eq!(keys, want);
    }
    let tr = &v[v.len() - 1]["trailer"];
    assert_eq!(tr["completed"], true);
    assert_eq!(tr["steps"], 10);
    assert!(tr["mass_drift"].as_f64().unwrap() < 1e-6);
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_config(dir.path(), "a", SMALL);
    let b = write_config(dir.path(), "b", SMALL);
    assert_eq!(shellnls(&["run", &a], Some("1")).status.code(), Some(0));
    assert_eq!(shellnls(&["run", &b], Some("3")).status.code(), Some(0));
    let strip = |p: &str| {
        let s = std::fs::read_to_string(dir.path().join(p)).unwrap();
        s.lines().skip(1).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(strip("a.jsonl"), strip("b.jsonl"));
}

#[test]
fn non_contraction_exits_two_with_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s", &format!("{SMALL}picard_max = 1\n"));
    let out = shellnls(&["run", &cfg], None);
    assert_eq!(out.status.code(), Some(2));
    let v = lines(&dir.path().join("s.jsonl"));
    assert!(v[1].get("mass").is_some());
    let tr = &v[v.len() - 1]["trailer"];
    assert_eq!(tr["completed"], false);
    assert!(tr["early_stop"].as_str().unwrap().contains("contract"));
}

#[test]
fn config_errors_exit_one_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "e", "[numerics]\nL = 2\ndt = 0\n");
    let out = shellnls(&["run", &cfg], None);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("dt"), "{err}");
    assert_eq!(
        shellnls(&["run", "/nonexistent.ini"], None).status.code(),
        Some(1)
    );
    assert_eq!(shellnls(&["frobnicate"], None).status.code(), Some(1));
}

#[test]
fn low_sigma_warning_record() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "w",
        "[physics]\nscenario = custom\nbeta = 1\nsigma = 0.3\n[numerics]\nL = 1\ndt = 1e-2\nT = 0.02\n",
    );
    let out = shellnls(&["run", &cfg], None);
    assert_eq!(out.status.code(), Some(0));
    let v = lines(&dir.path().join("w.jsonl"));
    assert!(v[1]["warning"]
        .as_str()
        .unwrap()
        .contains("sigma below paper regime 1/2"));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "o", SMALL);
    let out = shellnls(
        &["run", &cfg, "--dt", "0.02", "--T", "0.04", "--L", "1"],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let v = lines(&dir.path().join("o.jsonl"));
    let c = &v[0]["header"]["config"];
    assert_eq!(
        (c["dt"].as_f64(), c["T"].as_f64(), c["L"].as_u64()),
        (Some(0.02), Some(0.04), Some(1))
    );
    assert_eq!(v[v.len() - 1]["trailer"]["steps"], 2);
}

#[test]
fn print_config_shows_defaults() {
    let out = shellnls(&["print-config"], None);
    assert_eq!(out.status.code(), Some(0));
    let s = String::from_utf8(out.stdout).unwrap();
    for want in [
        "L = 8",
        "dt = 0.001",
        "T = 1",
        "lambda0 = 1",
        "scenario = free",
    ] {
        assert!(s.contains(want), "{want} missing in\n{s}");
    }
    let out = shellnls(&["print-config", "--L", "3"], None);
    assert!(String::from_utf8(out.stdout).unwrap().contains("L = 3"));
}

#[test]
fn snapshots_and_scenario_checks() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("q.csv");
    let body = format!(
        "[physics]\nscenario = free\n[numerics]\nL = 1\ndt = 1e-2\nT = 0.1\n[output]\nsnapshots = {}\nsnapshot_stride = 5\n",
        snap.display()
    );
    let path = dir.path().join("f.ini");
    std::fs::write(
        &path,
        body.replace(
            "[output]\n",
            &format!(
                "[output]\ndiagnostics = {}\n",
                dir.path().join("f.jsonl").display()
            ),
        ),
    )
    .unwrap();
    let out = shellnls(&["run", path.to_str().unwrap()], None);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for n in [0, 5, 10] {
        let csv = std::fs::read_to_string(dir.path().join(format!("q_{n:07}.csv"))).unwrap();
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows[0], "ell,m,re,im");
        assert_eq!(rows.len(), 5);
    }
    let v = lines(&dir.path().join("f.jsonl"));
    let gap = v[v.len() - 1]["trailer"]["checks"]["free_source_gap"]
        .as_f64()
        .unwrap();
    assert!(gap <= 1e-12);

    let cfg = write_config(
        dir.path(),
        "b",
        "[physics]\nscenario = bound-state\n[numerics]\nL = 0\ndt = 1e-3\nT = 0.2\n",
    );
    assert_eq!(shellnls(&["run", &cfg], None).status.code(), Some(0));
    let v = lines(&dir.path().join("b.jsonl"));
    let checks = &v[v.len() - 1]["trailer"]["checks"];
    assert!(checks["bound_phase_rate_error"].as_f64().unwrap() < 0.01);
    assert!(checks["bound_modulus_drift"].as_f64().unwrap() < 1e-3);
}
