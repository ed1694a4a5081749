//! Acceptance criteria 1-10, one PASS/FAIL line each. Runs without the libtest
//! harness so the table is always printed.

use implosion_core::verify::{run_criterion, VerifyOptions, CRITERIA};
use std::process::ExitCode;

fn main() -> ExitCode {
    let opts = VerifyOptions::default();
    let mut failed = Vec::new();
    for (id, _) in CRITERIA {
        let r = run_criterion(id, &opts);
        println!("{}", r.line());
        if !r.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: {} of {} criteria passed", CRITERIA.len(), CRITERIA.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
