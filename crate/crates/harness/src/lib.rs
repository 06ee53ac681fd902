//! Experiment harness: configuration, seeded instance generation,
//! campaigns, traces and the acceptance suites.

pub mod acceptance;
pub mod campaign;
pub mod config;
pub mod instance;
pub mod trace;

pub use campaign::{run_campaign, ExperimentReport, RunOptions};
pub use config::ExperimentConfig;
pub use instance::{generate_instance, Instance};
pub use trace::emit_trace;
