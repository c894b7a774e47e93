//! One PASS/FAIL line per criterion; exits non-zero if any fails.
//!
//! `ACCEPTANCE_SUITE=name` restricts the run to one suite.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use inhomtree::statharness::suites::{run_suite, SuiteConfig, SUITES};
use inhomtree::statharness::CriterionResult;

const SEED: u64 = 20261015;

/// Replicates per Monte Carlo step in the thread-count comparison.
const DETERMINISM_REPS: usize = 8;

fn time_limit(suite: &str) -> Duration {
    let minutes = match suite {
        "oracle" => 1,
        "urn" => 2,
        "distributions" | "tails" => 5,
        "exponent" | "tightness" | "moments" => 10,
        "coupling" => 15,
        _ => unreachable!("{suite}"),
    };
    Duration::from_secs(60 * minutes)
}

fn report(line: &CriterionResult, failed: &mut usize) {
    println!("{}", line.line());
    if !line.passed {
        *failed += 1;
    }
}

fn main() -> ExitCode {
    let only = std::env::var("ACCEPTANCE_SUITE").ok();
    let mut failed = 0;
    let mut total = 0;
    for name in SUITES {
        if only.as_deref().is_some_and(|o| o != name) {
            continue;
        }
        let t0 = Instant::now();
        let outcome = run_suite(name, &SuiteConfig::new(SEED));
        let elapsed = t0.elapsed();
        match outcome {
            Ok(r) => {
                for c in &r.criteria {
                    total += 1;
                    report(c, &mut failed);
                }
            }
            Err(e) => {
                total += 1;
                report(
                    &CriterionResult::new(
                        format!("{name}/run"),
                        false,
                        f64::NAN,
                        "suite completes",
                    )
                    .with_detail(e.to_string()),
                    &mut failed,
                );
            }
        }
        let limit = time_limit(name);
        total += 1;
        report(
            &CriterionResult::new(
                format!("{name}/runtime_s"),
                elapsed <= limit,
                elapsed.as_secs_f64(),
                format!("<= {} s", limit.as_secs()),
            ),
            &mut failed,
        );

        let small = |threads| {
            let cfg = SuiteConfig {
                threads: Some(threads),
                reps: Some(DETERMINISM_REPS),
                ..SuiteConfig::new(SEED)
            };
            run_suite(name, &cfg)
                .map(|r| r.to_json())
                .map_err(|e| e.to_string())
        };
        let (a, b) = (small(1), small(3));
        total += 1;
        report(
            &CriterionResult::new(
                format!("{name}/thread_independent"),
                a.is_ok() && a == b,
                (a == b) as u8 as f64,
                "report bytes equal for 1 and 3 threads",
            )
            .with_reps(DETERMINISM_REPS),
            &mut failed,
        );
    }
    println!("acceptance: {} of {total} criteria passed", total - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
