//! Runs every acceptance criterion and prints one line per criterion.
//!
//! `ACCEPTANCE_BOUND=n` caps all trace lengths, useful for quick runs.

use std::process::ExitCode;

use trace_wreath::verify::{run_all, Config};

fn main() -> ExitCode {
    let bound = std::env::var("ACCEPTANCE_BOUND").ok().and_then(|s| s.parse().ok());
    let reports = run_all(&Config { bound });
    let mut failed = 0;
    for r in &reports {
        println!("{}", r.line());
        failed += !r.passed as usize;
    }
    println!("{} of {} criteria passed", reports.len() - failed, reports.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
