use std::path::Path;
use std::process::Command;

fn interdep() -> Command {
    Command::new(env!("CARGO_BIN_EXE_interdep"))
}

fn write_config(dir: &Path, trials: usize) -> std::path::PathBuf {
    let path = dir.join("config.json");
    let text = format!(
        r#"{{"schema_version": 1, "mechanism": "eating", "n": 3,
            "valuation": {{"source": "fixed", "spec": {{"family": "mineral-average", "params": {{"scale": 2}}}}}},
            "trials": {trials}, "seed": 9}}"#
    );
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_writes_report_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 5);
    let out = dir.path().join("out");
    let status = interdep()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--trials", "4", "--emit-traces", "--certificates", "--audit"])
        .status()
        .unwrap();
    assert!(status.success());
    let report = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(report.lines().count(), 5);
    assert!(report.lines().nth(1).unwrap().contains(",pass,true,false,"));
    let trace = std::fs::read_to_string(out.join("traces/trial_00003.csv")).unwrap();
    assert_eq!(trace.lines().next().unwrap(), "owner,bidder,start_time,share,stopping_time");
    assert_eq!(trace.lines().count(), 1 + 3 * 3);
    assert!(out.join("certificates/trial_00000.json").exists());
}

#[test]
fn zero_trial_config_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 0);
    let output = interdep().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("trials must be at least 1"));
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let output = interdep().args(["check", "--suite", "everything"]).output().unwrap();
    assert!(!output.status.success());
}

#[test]
fn matroid_suite_passes() {
    let output = interdep().args(["check", "--suite", "matroid"]).output().unwrap();
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(output.status.success(), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
}
