//! Acceptance criteria 1 to 10, one pass/fail line each.

use std::process::ExitCode;

use mirroropt_cli::suite::{run_criterion, VerifyOptions};

fn main() -> ExitCode {
    let opts = VerifyOptions::default();
    let mut failed = 0;
    for id in 1..=10 {
        let (result, _) = run_criterion(id, &opts);
        if !result.passed {
            failed += 1;
        }
        println!("{result}");
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
