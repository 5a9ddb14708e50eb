//! Runs every acceptance criterion and prints one verdict line per criterion.
//!
//! Lines go straight to the stderr handle so they show up without --nocapture.

use std::io::Write;

use wickworks::verify::{run_all, DEFAULT_SEED};

#[test]
fn acceptance() {
    let results = run_all(DEFAULT_SEED);
    let mut err = std::io::stderr().lock();
    for r in &results {
        writeln!(err, "{}", r.line()).unwrap();
    }
    let failed: Vec<usize> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    writeln!(
        err,
        "{}/{} criteria passed",
        results.len() - failed.len(),
        results.len()
    )
    .unwrap();
    drop(err);
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
