//! One line per acceptance criterion; the test fails if any criterion does.
//! Criteria run sequentially in one test so their timings do not interfere.

use std::io::Write;

use interdep_harness::acceptance::{run_suite, Suite};

#[test]
fn acceptance_criteria() {
    let results = run_suite(Suite::All);
    let mut err = std::io::stderr().lock();
    for r in &results {
        writeln!(err, "{r}").unwrap();
    }
    let failed: Vec<_> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    writeln!(err, "acceptance: {} of {} criteria passed", results.len() - failed.len(), results.len()).unwrap();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
