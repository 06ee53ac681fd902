//! Experiment campaigns: run a mechanism over many seeded trials and
//! compare it against the welfare optimum.

use std::path::Path;

use anyhow::{Context, Result};
use interdep_core::matroid::greedy_max_weight;
use interdep_core::valuation::true_values;
use interdep_core::verify::{
    brute_force_opt, certify, truthfulness_audit, value_grid, AuditedMechanism, DualCertificate,
    BRUTE_FORCE_LIMIT,
};
use interdep_core::{
    CpMechanism, CpPlan, EatingMechanism, EatingOutcome, HeteroDReport, ShadowOperator, WeightFunction,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, MechanismKind, SCHEMA_VERSION};
use crate::instance::{generate_instance, Instance};
use crate::trace::write_trace;

/// Reports audited per bidder when `--audit` is on.
pub const AUDIT_GRID_POINTS: usize = 50;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub audit: bool,
    pub certificates: bool,
    pub emit_traces: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditStatus {
    Pass,
    Fail,
    Skipped,
}

/// One line of `report.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub instance_hash: String,
    pub n: usize,
    pub opt: Option<f64>,
    pub welfare: Option<f64>,
    /// `welfare / opt`, or 1 when `opt = 0`.
    pub ratio: Option<f64>,
    /// Guaranteed ratio for this mechanism and instance.
    pub bound: Option<f64>,
    /// Eating: `1 - sum_i x_i`. CP: 0, or -1 if some served set is dependent.
    pub feasibility_slack: Option<f64>,
    pub certificate_bound: Option<f64>,
    pub audit: AuditStatus,
    /// Inputs satisfy the mechanism's class, so the bounds must hold.
    pub conforming: bool,
    pub violation: bool,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub mechanism: String,
    pub seed: u64,
    pub trials: usize,
    pub completed: usize,
    pub errors: usize,
    pub min_ratio: Option<f64>,
    pub mean_ratio: Option<f64>,
    pub worst_slack: Option<f64>,
    pub audit_failures: usize,
    /// Trials of conforming instances that broke a guarantee.
    pub violations: Vec<usize>,
    pub passed: bool,
}

/// Per-trial outputs that go to their own files.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub eating: Option<EatingOutcome>,
    pub certificate: Option<DualCertificate>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub rows: Vec<TrialRow>,
    pub summary: Summary,
    pub artifacts: Vec<Artifacts>,
}

struct Measured {
    opt: f64,
    welfare: f64,
    bound: f64,
    slack: f64,
    certificate: Option<(DualCertificate, bool)>,
    audit: AuditStatus,
    conforming: bool,
    eating: Option<EatingOutcome>,
}

fn matroid_opt(inst: &Instance, values: &[f64]) -> Result<f64> {
    let m = inst.matroid.as_ref().context("matroid missing")?;
    if inst.n() <= BRUTE_FORCE_LIMIT {
        Ok(brute_force_opt(&inst.signals, &inst.valuations, m)?.value)
    } else {
        let w = WeightFunction::new(values.to_vec())?;
        Ok(greedy_max_weight(m, &w).total_weight(&w))
    }
}

fn audit_all(mech: &AuditedMechanism<'_>, inst: &Instance, values: &[f64]) -> Result<AuditStatus> {
    for (i, &v) in values.iter().enumerate() {
        let grid = value_grid(v, AUDIT_GRID_POINTS);
        if !truthfulness_audit(mech, &inst.signals, &inst.valuations, i, &grid)?.passed() {
            return Ok(AuditStatus::Fail);
        }
    }
    Ok(AuditStatus::Pass)
}

fn cp_slack(plan: &CpPlan, inst: &Instance) -> f64 {
    let m = inst.matroid.as_ref().expect("cp instances carry a matroid");
    let ok = plan.branches.iter().all(|b| b.slots.iter().all(|slot| m.is_independent(slot)));
    if ok { 0.0 } else { -1.0 }
}

fn hetero_reports(cfg: &ExperimentConfig, inst: &Instance) -> Result<HeteroDReport> {
    let reported = match &cfg.reported_d {
        Some(r) => r.clone(),
        None => inst.valuations.iter().map(|v| v.meta().claimed_d.unwrap_or(0)).collect(),
    };
    Ok(HeteroDReport::new(reported)?)
}

fn measure(cfg: &ExperimentConfig, inst: &Instance, opts: RunOptions) -> Result<Measured> {
    let values = true_values(&inst.signals, &inst.valuations)?;
    let audit_or_skip = |mech: AuditedMechanism<'_>| -> Result<AuditStatus> {
        if opts.audit { audit_all(&mech, inst, &values) } else { Ok(AuditStatus::Skipped) }
    };
    match cfg.mechanism {
        MechanismKind::Eating => {
            let mech = match cfg.normalization {
                Some(c) => EatingMechanism::with_normalization(c),
                None => EatingMechanism::default(),
            };
            let out = mech.run(&inst.signals, &inst.valuations)?;
            let certificate = if opts.certificates {
                let (cert, check) = certify(&inst.signals, &inst.valuations, &ShadowOperator::ZeroOut)?;
                Some((cert, check.all()))
            } else {
                None
            };
            let conforming = mech.normalization >= 4.0
                && inst.valuations.iter().all(|v| v.meta().claimed_sos && v.meta().monotone);
            Ok(Measured {
                opt: values.iter().copied().fold(0.0, f64::max),
                welfare: out.expected_welfare(),
                bound: 0.2,
                slack: 1.0 - out.total_allocation,
                certificate,
                audit: audit_or_skip(AuditedMechanism::Eating(mech))?,
                conforming,
                eating: opts.emit_traces.then_some(out),
            })
        }
        MechanismKind::Cp => {
            let m = inst.matroid.as_ref().context("matroid missing")?;
            let d = cfg.d.unwrap_or_else(|| inst.max_claimed_d());
            let mechanism = CpMechanism::default();
            let plan = mechanism.plan(&inst.signals, &inst.valuations, m, d)?;
            let conforming = inst.valuations.iter().all(|v| v.meta().claimed_d.is_some_and(|c| c <= d));
            Ok(Measured {
                opt: matroid_opt(inst, &values)?,
                welfare: plan.expected_welfare(),
                bound: 1.0 / (d + 1) as f64,
                slack: cp_slack(&plan, inst),
                certificate: None,
                audit: audit_or_skip(AuditedMechanism::Cp { matroid: m, d, mechanism })?,
                conforming,
                eating: None,
            })
        }
        MechanismKind::CpHetero => {
            let m = inst.matroid.as_ref().context("matroid missing")?;
            let reports = hetero_reports(cfg, inst)?;
            let mechanism = CpMechanism::default();
            let plan = mechanism.plan_hetero(&inst.signals, &inst.valuations, m, &reports)?;
            let conforming = inst
                .valuations
                .iter()
                .zip(&reports.reported)
                .all(|(v, &r)| v.meta().claimed_d.is_some_and(|c| c <= r));
            let top = reports.reported.iter().copied().max().unwrap_or(0);
            Ok(Measured {
                opt: matroid_opt(inst, &values)?,
                welfare: plan.expected_welfare(),
                bound: 1.0 / (2 * (top + 1)) as f64,
                slack: cp_slack(&plan, inst),
                certificate: None,
                audit: audit_or_skip(AuditedMechanism::CpHetero { matroid: m, reports, mechanism })?,
                conforming,
                eating: None,
            })
        }
    }
}

fn run_trial(cfg: &ExperimentConfig, trial: usize, opts: RunOptions) -> (TrialRow, Artifacts) {
    let tol = cfg.tolerances.property;
    let mut row = TrialRow {
        trial,
        instance_hash: String::new(),
        n: cfg.n,
        opt: None,
        welfare: None,
        ratio: None,
        bound: None,
        feasibility_slack: None,
        certificate_bound: None,
        audit: AuditStatus::Skipped,
        conforming: false,
        violation: false,
        error: String::new(),
    };
    let inst = match generate_instance(cfg, trial) {
        Ok(inst) => inst,
        Err(e) => {
            row.error = e.to_string();
            return (row, Artifacts::default());
        }
    };
    row.instance_hash = inst.hash();
    let m = match measure(cfg, &inst, opts) {
        Ok(m) => m,
        Err(e) => {
            log::error!("trial {trial}: {e:#}");
            row.error = format!("{e:#}");
            return (row, Artifacts::default());
        }
    };
    let ratio = if m.opt > 0.0 { m.welfare / m.opt } else { 1.0 };
    let cert_ok = m.certificate.as_ref().is_none_or(|(_, ok)| *ok);
    let broken = ratio < m.bound - tol || m.slack < -tol || !cert_ok || m.audit == AuditStatus::Fail;
    row.opt = Some(m.opt);
    row.welfare = Some(m.welfare);
    row.ratio = Some(ratio);
    row.bound = Some(m.bound);
    row.feasibility_slack = Some(m.slack);
    row.certificate_bound = m.certificate.as_ref().map(|(c, _)| c.bound);
    row.audit = m.audit;
    row.conforming = m.conforming;
    row.violation = m.conforming && broken;
    if row.violation {
        log::error!("trial {trial} ({}) breaks a guarantee: ratio {ratio}, slack {}", row.instance_hash, m.slack);
    }
    (row, Artifacts { eating: m.eating, certificate: m.certificate.map(|(c, _)| c) })
}

fn summarise(cfg: &ExperimentConfig, rows: &[TrialRow]) -> Summary {
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    let fold_min = |xs: &mut dyn Iterator<Item = f64>| xs.reduce(f64::min);
    let violations: Vec<usize> = rows.iter().filter(|r| r.violation).map(|r| r.trial).collect();
    Summary {
        schema_version: SCHEMA_VERSION,
        mechanism: cfg.mechanism.as_str().to_string(),
        seed: cfg.seed,
        trials: rows.len(),
        completed: ratios.len(),
        errors: rows.iter().filter(|r| !r.error.is_empty()).count(),
        min_ratio: fold_min(&mut ratios.iter().copied()),
        mean_ratio: (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
        worst_slack: fold_min(&mut rows.iter().filter_map(|r| r.feasibility_slack)),
        audit_failures: rows.iter().filter(|r| r.audit == AuditStatus::Fail).count(),
        passed: violations.is_empty(),
        violations,
    }
}

/// Runs every trial in parallel; rows come back in trial order, so the
/// report does not depend on scheduling.
pub fn run_campaign(cfg: &ExperimentConfig, opts: RunOptions) -> ExperimentReport {
    let (rows, artifacts): (Vec<_>, Vec<_>) =
        (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t, opts)).collect::<Vec<_>>().into_iter().unzip();
    let summary = summarise(cfg, &rows);
    ExperimentReport { rows, summary, artifacts }
}

impl ExperimentReport {
    pub fn write_csv<W: std::io::Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `report.csv`, `summary.json` and any traces or certificates
    /// under `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let csv_path = dir.join("report.csv");
        let file = std::fs::File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
        self.write_csv(std::io::BufWriter::new(file))?;
        let mut summary = serde_json::to_string_pretty(&self.summary)?;
        summary.push('\n');
        std::fs::write(dir.join("summary.json"), summary)?;

        for (row, art) in self.rows.iter().zip(&self.artifacts) {
            if let Some(out) = &art.eating {
                let traces = dir.join("traces");
                std::fs::create_dir_all(&traces)?;
                let file = std::fs::File::create(traces.join(format!("trial_{:05}.csv", row.trial)))?;
                write_trace(out, std::io::BufWriter::new(file))?;
            }
            if let Some(cert) = &art.certificate {
                let certs = dir.join("certificates");
                std::fs::create_dir_all(&certs)?;
                let mut text = serde_json::to_string_pretty(cert)?;
                text.push('\n');
                std::fs::write(certs.join(format!("trial_{:05}.json", row.trial)), text)?;
            }
        }
        Ok(())
    }
}
