//! Acceptance criteria 1 to 11 at full scale.
//!
//! Prints one PASS/FAIL line per criterion, then fails if any criterion did.
//! Criterion 11 runs inside the suite at smoke scale; here the whole
//! full-scale summary is also regenerated on a different thread count and
//! compared byte for byte.

use std::time::Instant;

use stochclifford::calculus::fixture_registry;
use stochclifford_cli::experiments::to_json;
use stochclifford_cli::{reproduce_all, reproduce_all_observed, Scale, Summary, DEFAULT_SEED};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
        .install(f)
}

#[test]
fn acceptance_criteria() {
    let registry = fixture_registry();
    let summary: Summary = in_pool(1, || {
        reproduce_all_observed(DEFAULT_SEED, Scale::Full, &registry, &mut |r, elapsed| {
            println!(
                "criterion {:>2}: {} ({:6.1} s) {}",
                r.id,
                if r.passed { "PASS" } else { "FAIL" },
                elapsed.as_secs_f64(),
                r.title
            );
            for c in r.checks.iter().filter(|c| !c.passed) {
                println!("    {}: {}", c.name, c.detail);
            }
        })
    })
    .expect("suite runs");
    println!(
        "registry consistency: {}",
        if summary.registry.passed { "PASS" } else { "FAIL" }
    );

    let start = Instant::now();
    let again = in_pool(2, || reproduce_all(DEFAULT_SEED, Scale::Full, &registry)).expect("suite runs");
    let identical = to_json(&summary).unwrap() == to_json(&again).unwrap();
    println!(
        "criterion 11 (full scale, 1 vs 2 threads): {} ({:6.1} s)",
        if identical { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );

    assert!(identical, "full-scale summaries differ between thread counts");
    assert!(
        summary.passed,
        "failed criteria {:?}; registry failures {:?}",
        summary.failed_criteria, summary.registry.failures
    );
}
