//! Runs every acceptance criterion and prints one PASS/FAIL line each.
//!
//! Criterion 6 is expected to fail: the gap of the two stationarity
//! conditions has its only root near 0.2276, and the true-gradient
//! stationary points at the two smallest temperatures are nearly
//! deterministic, so the semi-gradient there is below the threshold.
//! Any other failure, or criterion 6 starting to pass, fails this target.

use std::process::ExitCode;

use emphace_core::verify::{run_criterion, CRITERIA};

const EXPECTED_FAILURES: &[u8] = &[6];

fn main() -> ExitCode {
    let mut unexpected = Vec::new();
    for &(id, ..) in CRITERIA.iter() {
        let report = run_criterion(id).expect("listed criterion");
        println!("{report}");
        if report.passed == EXPECTED_FAILURES.contains(&id) {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: all outcomes as expected (known failures: {EXPECTED_FAILURES:?})");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
