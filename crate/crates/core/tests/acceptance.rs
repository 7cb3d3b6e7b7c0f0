//! Acceptance suite: one line per criterion, nonzero exit on any failure.

use std::process::ExitCode;
use std::time::Instant;

use dilute_cw::verify::{all_checks, run_check};
use dilute_cw::Precision;

/// Wall-clock budgets in seconds, where a criterion states one.
fn budget(id: usize) -> Option<f64> {
    match id {
        1 => Some(5.0),
        5 => Some(30.0),
        _ => None,
    }
}

const TOTAL_BUDGET_SECS: f64 = 600.0;

fn main() -> ExitCode {
    let prec = Precision::default();
    let start = Instant::now();
    let mut failures = 0;
    for (id, _, _) in all_checks() {
        let outcome = run_check(id, prec).expect("registered check");
        let in_time = budget(id).is_none_or(|b| outcome.seconds < b);
        let passed = outcome.passed && in_time;
        if !passed {
            failures += 1;
        }
        let timing = match budget(id) {
            Some(b) => format!("{:.2}s, budget {b}s", outcome.seconds),
            None => format!("{:.2}s", outcome.seconds),
        };
        println!(
            "{} criterion {id:>2} {} ({timing}): {}",
            if passed { "PASS" } else { "FAIL" },
            outcome.name,
            outcome.detail
        );
    }
    let total = start.elapsed().as_secs_f64();
    let in_time = total < TOTAL_BUDGET_SECS;
    if !in_time {
        failures += 1;
    }
    println!(
        "{} total runtime {total:.2}s (budget {TOTAL_BUDGET_SECS}s)",
        if in_time { "PASS" } else { "FAIL" }
    );
    if failures == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} failure(s)");
        ExitCode::FAILURE
    }
}
