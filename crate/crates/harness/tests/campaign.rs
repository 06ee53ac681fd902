use interdep_harness::campaign::AuditStatus;
use interdep_harness::{run_campaign, ExperimentConfig, RunOptions};

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(text).unwrap()
}

const EATING: &str = r#"{
    "schema_version": 1, "mechanism": "eating", "n": 5,
    "valuation": {"source": "random-sos"},
    "signals": {"distribution": "grid", "points": [0, 0.25, 1, 3]},
    "trials": 1000, "seed": 42
}"#;

const CP: &str = r#"{
    "schema_version": 1, "mechanism": "cp", "n": 7,
    "valuation": {"source": "fixed", "spec": {"family": "max-signal", "params": {"scale": 1}}},
    "matroid": {"source": "random"},
    "trials": 300, "seed": 3, "d": 1
}"#;

#[test]
fn eating_campaign_stays_above_one_fifth() {
    let report = run_campaign(&config(EATING), RunOptions { certificates: true, ..Default::default() });
    let s = &report.summary;
    assert_eq!(s.completed, 1000);
    assert!(s.passed, "violations {:?}", s.violations);
    assert!(s.min_ratio.unwrap() >= 0.2 - 1e-9);
    assert!(s.worst_slack.unwrap() >= -1e-9);
    for row in &report.rows {
        assert!(row.conforming);
        assert!(row.certificate_bound.unwrap() <= 4.0 + 1e-9);
    }
}

#[test]
fn cp_max_signal_campaign_stays_above_one_half() {
    let report = run_campaign(&config(CP), RunOptions::default());
    assert!(report.summary.passed);
    assert_eq!(report.summary.errors, 0);
    assert!(report.summary.min_ratio.unwrap() >= 0.5 - 1e-9);
}

#[test]
fn audited_hetero_campaign_passes() {
    let text = r#"{
        "schema_version": 1, "mechanism": "cp-hetero", "n": 5,
        "valuation": {"source": "random-critical", "max_d": 3},
        "matroid": {"source": "random"},
        "trials": 40, "seed": 5
    }"#;
    let report = run_campaign(&config(text), RunOptions { audit: true, ..Default::default() });
    assert!(report.summary.passed, "{:?}", report.summary);
    assert!(report.rows.iter().all(|r| r.audit == AuditStatus::Pass));
}

#[test]
fn reports_are_byte_identical() {
    let cfg = config(EATING);
    let opts = RunOptions { certificates: true, emit_traces: true, audit: false };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_campaign(&cfg, opts).write_to(a.path()).unwrap();
    run_campaign(&cfg, opts).write_to(b.path()).unwrap();
    for name in ["report.csv", "summary.json", "traces/trial_00007.csv", "certificates/trial_00007.json"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name} differs between runs");
    }
}

#[test]
fn per_trial_failures_do_not_stop_the_campaign() {
    // d = 0 is below the max-signal class, so the partition step can fail on
    // some trials; those rows carry the error and are not class-conforming.
    let text = CP.replace("\"d\": 1", "\"d\": 0");
    let report = run_campaign(&config(&text), RunOptions::default());
    assert_eq!(report.rows.len(), 300);
    assert!(report.summary.errors > 0);
    assert!(report.rows.iter().all(|r| !r.conforming));
    assert!(report.summary.passed);
}

#[test]
fn zero_trials_are_rejected() {
    assert!(ExperimentConfig::from_json(&CP.replace("\"trials\": 300", "\"trials\": 0")).is_err());
}
