use std::path::Path;
use std::process::{Command, Output};

use pgac::lqr::PlantModel;
use pgac::numerics::Matrix;
use pgac::scenario::{ModeGen, ScenarioConfig};

fn pgac(args: &[&str], paths: &[&Path]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pgac"));
    let mut p = paths.iter();
    for a in args {
        if *a == "{}" {
            cmd.arg(p.next().unwrap());
        } else {
            cmd.arg(a);
        }
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, cfg: &ScenarioConfig) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, cfg.to_json().unwrap()).unwrap();
    path
}

#[test]
fn simulate_then_certify_is_self_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &ScenarioConfig::reference());
    let out = dir.path().join("out");
    assert!(pgac(&["simulate", "--config", "{}", "--out", "{}"], &[&config, &out]).status.success());
    let res = pgac(&["certify", "--log", "{}"], &[&out.join("42.runlog.json")]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(String::from_utf8_lossy(&res.stdout).contains("verdict"));
}

#[test]
fn tampered_log_names_the_failed_check() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &ScenarioConfig::reference());
    let out = dir.path().join("out");
    assert!(pgac(&["simulate", "--config", "{}", "--out", "{}"], &[&config, &out]).status.success());
    let log_path = out.join("42.runlog.json");
    let mut log: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&log_path).unwrap()).unwrap();
    let k = &mut log["steps"][100]["k"][0][0];
    *k = serde_json::json!(k.as_f64().unwrap() + 1e-3);
    std::fs::write(&log_path, serde_json::to_string(&log).unwrap()).unwrap();

    let res = pgac(&["certify", "--log", "{}"], &[&log_path]);
    assert_eq!(res.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&res.stdout);
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stdout.contains("Inconsistent"), "{stdout}");
    assert!(stderr.contains("replay.update"), "{stderr}");
}

#[test]
fn fig1_marks_exactly_the_transition_windows() {
    let dir = tempfile::tempdir().unwrap();
    assert!(pgac(&["reproduce-fig1", "--out", "{}"], &[dir.path()]).status.success());
    let text = std::fs::read_to_string(dir.path().join("fig1.csv")).unwrap();
    let cfg = ScenarioConfig::reference();
    let schedule = cfg.schedule(42).unwrap();
    let len = cfg.window as i64;
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let t: i64 = cols[0].parse().unwrap();
        let expected = schedule.switch_times().iter().any(|&ts| t >= ts && t < ts + len);
        assert_eq!(cols[2], if expected { "1" } else { "0" }, "t = {t}");
        rows += 1;
    }
    assert_eq!(rows, cfg.horizon);
}

#[test]
fn fig2_csv_has_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    assert!(pgac(&["reproduce-fig2", "--out", "{}"], &[dir.path()]).status.success());
    let text = std::fs::read_to_string(dir.path().join("fig2.csv")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "t,state_norm,bound_total,bound_decay_term,bound_probe_term"
    );
    assert_eq!(text.lines().count(), ScenarioConfig::reference().horizon + 1);
}

#[test]
fn malformed_config_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let text = ScenarioConfig::reference().to_json().unwrap().replace("\"eta\": 0.025", "\"eta\": \"fast\"");
    std::fs::write(&path, text).unwrap();
    let out = dir.path().join("out");
    let res = pgac(&["simulate", "--config", "{}", "--out", "{}"], &[&path, &out]);
    assert_eq!(res.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("line"), "{stderr}");

    let mut cfg = ScenarioConfig::reference();
    cfg.b0 = Matrix::zeros(4, 3);
    let text = serde_json::to_string_pretty(&cfg).unwrap();
    std::fs::write(&path, text).unwrap();
    let res = pgac(&["simulate", "--config", "{}", "--out", "{}"], &[&path, &out]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("B0"));
}

#[test]
fn blowup_writes_partial_log_and_fails() {
    let mut cfg = ScenarioConfig::reference();
    let unstable = PlantModel::new(Matrix::identity(4, 4) * 5.0, cfg.b0.clone()).unwrap();
    cfg.mode_gen = ModeGen::Explicit {
        modes: vec![unstable],
        switch_times: vec![cfg.t0 + 30],
    };
    cfg.horizon = 100;
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &cfg);
    let out = dir.path().join("out");
    let res = pgac(&["simulate", "--config", "{}", "--out", "{}"], &[&config, &out]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("aborted"));
    let log = pgac::experiment::RunLog::load(&out.join("42.runlog.json")).unwrap();
    let abort = log.aborted.expect("abort recorded");
    assert!(abort.norm > cfg.blowup_threshold);
    assert!(!log.steps.is_empty() && log.steps.len() < cfg.horizon);
    assert!(log.report.is_none());

    let res = pgac(&["certify", "--log", "{}"], &[&out.join("42.runlog.json")]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn selftest_passes() {
    let res = pgac(&["selftest"], &[]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stdout));
}
