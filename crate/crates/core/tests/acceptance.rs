//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with
//! a failure status if any criterion fails.
//!
//! Run alone with `cargo test -p fretcav --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use fretcav::checks::{self, CheckReport};

fn main() -> ExitCode {
    let suite: [(u8, fn() -> CheckReport); 12] = [
        (1, checks::free_space_agreement),
        (2, checks::flow_maximum),
        (3, checks::separation_scaling),
        (4, checks::flow_reversal),
        (5, checks::cooperativity_formula),
        (6, checks::optimal_detuning),
        (7, checks::coherent_formulas),
        (8, checks::moment_closure),
        (9, checks::subradiance_spectrum),
        (10, checks::concurrence_suite),
        (11, checks::pump_elimination),
        (12, checks::determinism_and_convergence),
    ];
    let mut failed = Vec::new();
    println!("\nacceptance criteria");
    for (id, check) in suite {
        let start = Instant::now();
        let r = check();
        assert_eq!(r.id, id, "check registered under the wrong number");
        println!("{r} [{:.1}s]", start.elapsed().as_secs_f64());
        if !r.passed {
            failed.push(id);
        }
    }
    println!("{} passed, {} failed {:?}\n", suite.len() - failed.len(), failed.len(), failed);
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
