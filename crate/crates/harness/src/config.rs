//! Experiment configuration (JSON).

use std::path::{Path, PathBuf};

use interdep_core::matroid::MatroidSpec;
use interdep_core::ValuationFamilySpec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    Schema(u32),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MechanismKind {
    Eating,
    Cp,
    CpHetero,
}

impl MechanismKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MechanismKind::Eating => "eating",
            MechanismKind::Cp => "cp",
            MechanismKind::CpHetero => "cp-hetero",
        }
    }
}

/// Where each trial's valuations come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum ValuationSource {
    /// The same family for every trial.
    Fixed { spec: ValuationFamilySpec },
    /// Affine resale, max-signal or mineral average with random coefficients.
    RandomSos,
    /// Max-signal (1-critical) or weighted rank of a uniform matroid of rank `<= max_d`.
    RandomCritical { max_d: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum MatroidSource {
    Fixed { spec: MatroidSpec },
    /// Uniform, partition or graphic, drawn per trial.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "distribution", rename_all = "kebab-case")]
pub enum SignalDistribution {
    Uniform { low: f64, high: f64 },
    Exponential { rate: f64 },
    /// Each signal drawn uniformly from `points`.
    Grid { points: Vec<f64> },
}

impl Default for SignalDistribution {
    fn default() -> Self {
        SignalDistribution::Uniform { low: 0.0, high: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_property_tol")]
    pub property: f64,
}

fn default_property_tol() -> f64 {
    interdep_core::tolerance::PROPERTY_TOL
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { property: default_property_tol() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub mechanism: MechanismKind,
    pub n: usize,
    pub valuation: ValuationSource,
    /// Required for the matroid mechanisms; the eating mechanism sells one item.
    #[serde(default)]
    pub matroid: Option<MatroidSource>,
    #[serde(default)]
    pub signals: SignalDistribution,
    pub trials: usize,
    pub seed: u64,
    /// Criticality bound for `cp`; defaults to the largest claimed d.
    #[serde(default)]
    pub d: Option<usize>,
    /// Reported d per bidder for `cp-hetero`; defaults to each bidder's claimed d.
    #[serde(default)]
    pub reported_d: Option<Vec<usize>>,
    #[serde(default)]
    pub normalization: Option<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        if let Some(v) = raw.get("schema_version").and_then(|v| v.as_u64()) {
            if v != u64::from(SCHEMA_VERSION) {
                return Err(ConfigError::Schema(v as u32));
            }
        }
        let cfg: Self = serde_json::from_value(raw)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Schema(self.schema_version));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.n == 0 {
            return bad("n must be at least 1");
        }
        if self.mechanism != MechanismKind::Eating && self.matroid.is_none() {
            return bad("the cp mechanisms need a matroid");
        }
        if let Some(r) = &self.reported_d {
            if r.len() != self.n {
                return bad("reported_d must have one entry per bidder");
            }
        }
        if let Some(c) = self.normalization {
            if !(c.is_finite() && c > 0.0) {
                return bad("normalization must be positive");
            }
        }
        match &self.signals {
            SignalDistribution::Uniform { low, high } if !(0.0 <= *low && low <= high && high.is_finite()) => {
                bad("uniform signals need 0 <= low <= high")
            }
            SignalDistribution::Exponential { rate } if !(rate.is_finite() && *rate > 0.0) => {
                bad("exponential rate must be positive")
            }
            SignalDistribution::Grid { points }
                if points.is_empty() || points.iter().any(|p| !(p.is_finite() && *p >= 0.0)) =>
            {
                bad("grid points must be non-empty, finite and non-negative")
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "schema_version": 1,
        "mechanism": "cp",
        "n": 3,
        "valuation": {"source": "fixed", "spec": {"family": "max-signal", "params": {"scale": 1}}},
        "matroid": {"source": "fixed", "spec": {"kind": "uniform", "params": {"n": 3, "k": 1}}},
        "trials": 5,
        "seed": 42
    }"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_json(BASE).unwrap();
        assert_eq!(cfg.mechanism, MechanismKind::Cp);
        assert_eq!(cfg.signals, SignalDistribution::Uniform { low: 0.0, high: 1.0 });
        assert_eq!(cfg.tolerances.property, 1e-9);
    }

    #[test]
    fn zero_trials_rejected_at_parse() {
        let text = BASE.replace("\"trials\": 5", "\"trials\": 0");
        assert!(matches!(ExperimentConfig::from_json(&text), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn seed_is_mandatory() {
        let text = BASE.replace(",\n        \"seed\": 42", "");
        assert!(matches!(ExperimentConfig::from_json(&text), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn schema_and_matroid_checks() {
        let text = BASE.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(matches!(ExperimentConfig::from_json(&text), Err(ConfigError::Schema(2))));
        let mut cfg = ExperimentConfig::from_json(BASE).unwrap();
        cfg.matroid = None;
        assert!(cfg.validate().is_err());
    }
}
