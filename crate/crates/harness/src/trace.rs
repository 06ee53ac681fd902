//! Eating-process traces: one CSV row per (process owner, bidder).

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use interdep_core::EatingOutcome;

pub const TRACE_HEADER: [&str; 5] = ["owner", "bidder", "start_time", "share", "stopping_time"];

fn fmt_opt(t: Option<f64>) -> String {
    t.map_or_else(|| "never".to_string(), |t| t.to_string())
}

/// Writes the trace to any sink. Bidders that never start get `never`.
pub fn write_trace<W: Write>(outcome: &EatingOutcome, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(TRACE_HEADER)?;
    for row in outcome.trace_rows() {
        w.write_record([
            row.process_owner.to_string(),
            row.bidder.to_string(),
            fmt_opt(row.start_time),
            row.share.to_string(),
            fmt_opt(row.stopping_time),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_trace(outcome: &EatingOutcome, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("creating trace {}", path.display()))?;
    write_trace(outcome, std::io::BufWriter::new(file)).with_context(|| format!("writing trace {}", path.display()))
}
