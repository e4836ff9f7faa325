use std::fs;
use std::path::Path;
use std::process::Command;

use poe_core::diagnostics::FitOptions;
use poe_core::io::pipeline::{analyze_file, run_config, series_csv};

const BIN: &str = env!("CARGO_BIN_EXE_poe");

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn paper_config(noise: &str, shots: u64, outputs: &str) -> String {
    format!(
        r#"{{"schema_version": 1, "circuit": {{"preset": "paper"}}, "initial_state": "00",
            "noise": {noise}, "n_max": 35, "shots": {shots}, "seed": 5, "outputs": [{outputs}]}}"#
    )
}

const ALL_OUTPUTS: &str = r#"{"kind": "csv", "path": "out/series.csv"}, {"kind": "json", "path": "out/report.json"},
    {"kind": "svg", "path": "out/log.svg"}, {"kind": "residual_svg", "path": "out/res.svg"}"#;

#[test]
fn run_writes_outputs_and_reports_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "paper.json", &paper_config(r#"{"type": "none"}"#, 0, ALL_OUTPUTS));
    let out = Command::new(BIN).arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("consistent_with_POE"), "{stdout}");
    let csv = fs::read_to_string(dir.path().join("out/series.csv")).unwrap();
    assert!(csv.starts_with("n,S_n,ln_S_n,variance,residual_ppt\n"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["diagnostics"]["verdict"]["verdict"], "consistent_with_POE");
    assert!(report["spectral"]["lambda_max"].is_number());
    assert!(fs::read_to_string(dir.path().join("out/log.svg")).unwrap().contains("max |data - fit|"));
}

#[test]
fn damped_run_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "damped.json",
        &paper_config(r#"{"type": "amplitude_damping", "t1_in_cycles": 5}"#, 0, r#"{"kind": "json", "path": "r.json"}"#),
    );
    let out = Command::new(BIN).arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("POE_sensitive_error_detected"));
}

#[test]
fn malformed_config_leaves_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let broken = paper_config(r#"{"type": "none"}"#, 0, ALL_OUTPUTS).replace("\"n_max\": 35,", "\"n_max\": 35");
    let cfg = write_config(dir.path(), "bad.json", &broken);
    let out = Command::new(BIN).arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn invariant_violation_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "inv.json",
        r#"{"schema_version": 1, "circuit": {"preset": "paper"}, "n_max": 2, "shots": 0}"#,
    );
    let out = Command::new(BIN).arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn missing_config_is_io_error() {
    let out = Command::new(BIN).args(["run", "/nonexistent/none.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn insufficient_data_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..=4).map(|k| format!("r,{k},10,10\n")).collect();
    let rec = dir.path().join("flat.csv");
    fs::write(
        &rec,
        format!("# poe-record v1\n# kind: recurrence\n# n_max: 4\n# shots: 10\nfamily,k,success_count,total_shots\n{rows}"),
    )
    .unwrap();
    let out = Command::new(BIN).arg("analyze").arg(&rec).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn spectrum_prints_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "p.json", &paper_config(r#"{"type": "none"}"#, 0, ""));
    let out = Command::new(BIN).arg("spectrum").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "decaying");
}

#[test]
fn identical_seed_gives_identical_files() {
    let outputs = r#"{"kind": "csv", "path": "s.csv"}, {"kind": "json", "path": "r.json"},
        {"kind": "svg", "path": "p.svg"}, {"kind": "record", "path": "rec.csv"}"#;
    let body = paper_config(r#"{"type": "drift", "dtheta_per_cycle": 0.01}"#, 2000, outputs);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let cfg = write_config(d.path(), "c.json", &body);
        assert_eq!(Command::new(BIN).arg("run").arg(&cfg).status().unwrap().code(), Some(0));
    }
    for f in ["s.csv", "r.json", "p.svg", "rec.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn exported_record_reanalyzes_identically() {
    let dir = tempfile::tempdir().unwrap();
    let outputs = r#"{"kind": "record", "path": "rec.csv"}"#;
    let body = paper_config(r#"{"type": "amplitude_damping", "t1_in_cycles": 30}"#, 20000, outputs)
        .replace("\"outputs\"", "\"fit\": {\"window\": [1, 35]}, \"outputs\"");
    let cfg = write_config(dir.path(), "c.json", &body);
    let simulated = run_config(&cfg).unwrap();
    let opts = FitOptions {
        window: Some([1, 35]),
        ..FitOptions::default()
    };
    let (rec, report) = analyze_file(&dir.path().join("rec.csv"), &opts).unwrap();
    assert_eq!(rec.values, simulated.record.values);
    assert_eq!(
        serde_json::to_string_pretty(&report.diagnostics).unwrap(),
        serde_json::to_string_pretty(simulated.analysis()).unwrap()
    );
    assert_eq!(series_csv(&report.diagnostics).unwrap(), series_csv(simulated.analysis()).unwrap());

    let out = Command::new(BIN)
        .arg("analyze")
        .arg(dir.path().join("rec.csv"))
        .args(["--fit-window", "1:35", "--alpha", "0.01", "--out"])
        .arg(dir.path().join("analysis"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        fs::read_to_string(dir.path().join("analysis/series.csv")).unwrap(),
        series_csv(simulated.analysis()).unwrap()
    );
}

#[test]
fn sweep_runs_all_configs() {
    let dir = tempfile::tempdir().unwrap();
    for t1 in [5, 10, 20, 50] {
        write_config(
            dir.path(),
            &format!("t1_{t1:02}.json"),
            &paper_config(&format!(r#"{{"type": "amplitude_damping", "t1_in_cycles": {t1}}}"#), 0, ""),
        );
    }
    write_config(dir.path(), "t1_inf.json", &paper_config(r#"{"type": "none"}"#, 0, ""));
    let out = Command::new(BIN).arg("sweep").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("sweep_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 6);
    assert!(summary.contains("t1_05,POE_sensitive_error_detected"));
    assert!(summary.contains("t1_inf,consistent_with_POE"));
    let svg = fs::read_to_string(dir.path().join("sweep_residuals.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 5);
}

#[test]
fn bad_fit_window_flag_is_rejected() {
    let out = Command::new(BIN).args(["analyze", "x.csv", "--fit-window", "3-9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
