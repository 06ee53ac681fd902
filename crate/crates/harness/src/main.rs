use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use interdep_harness::acceptance::{run_suite, Suite};
use interdep_harness::{run_campaign, ExperimentConfig, RunOptions};

#[derive(Parser)]
#[command(name = "interdep", version, about = "Truthful auctions with interdependent values: campaigns and acceptance checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment campaign described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the configured trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Override the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: the config's out_dir, else ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write one eating-process trace per trial.
        #[arg(long)]
        emit_traces: bool,
        /// Audit every bidder for profitable deviations.
        #[arg(long)]
        audit: bool,
        /// Build and check dual certificates (eating only).
        #[arg(long)]
        certificates: bool,
    },
    /// Run acceptance suites.
    Check {
        #[arg(long, default_value = "all")]
        suite: Suite,
    },
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, trials, seed, out, emit_traces, audit, certificates } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.validate()?;
            let dir = out.or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
            let report = run_campaign(&cfg, RunOptions { audit, certificates, emit_traces });
            report.write_to(&dir).with_context(|| format!("writing report to {}", dir.display()))?;
            let s = &report.summary;
            println!(
                "{} trials ({} errors): min ratio {}, mean ratio {}, worst slack {}, audit failures {}",
                s.trials,
                s.errors,
                fmt_opt(s.min_ratio),
                fmt_opt(s.mean_ratio),
                fmt_opt(s.worst_slack),
                s.audit_failures
            );
            if !s.passed {
                eprintln!("guarantee violated on trials {:?}", s.violations);
            }
            println!("report written to {}", dir.display());
            Ok(s.passed)
        }
        Command::Check { suite } => {
            let results = run_suite(suite);
            for r in &results {
                println!("{r}");
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            println!("{} of {} criteria passed", results.len() - failed, results.len());
            Ok(failed == 0)
        }
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6}"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
