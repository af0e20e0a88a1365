//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary
//! (`harness = false`) and exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use plap::sampling::DEFAULT_SEED;
use plap::suites::{self, Check};

struct Criterion {
    id: u32,
    title: &'static str,
    limit: Option<Duration>,
    run: fn(u64) -> Vec<Check>,
}

fn criteria() -> Vec<Criterion> {
    vec![
        Criterion {
            id: 1,
            title: "three-way delta_p agreement over 200 random configurations",
            limit: Some(Duration::from_secs(10)),
            run: |seed| suites::three_way_agreement(seed, 200),
        },
        Criterion {
            id: 2,
            title: "sign map over p in [0.2, 4] step 0.05, n in 1..6",
            limit: Some(Duration::from_secs(1)),
            run: |_| vec![suites::sign_map_reproduction()],
        },
        Criterion {
            id: 3,
            title: "concave quadratic additions keep delta_p <= 1e-10 (100 pairs)",
            limit: Some(Duration::from_secs(10)),
            run: |seed| vec![suites::concave_addition(seed, 100)],
        },
        Criterion {
            id: 4,
            title: "non-concave diag(1-m, 1, ..., 1) satisfies the eigenvalue criterion",
            limit: None,
            run: |seed| suites::non_concave_counterexample(seed, 1000),
        },
        Criterion {
            id: 5,
            title: "comparison principle on 65x65 grids, p in {2.5, 3}, 10 configurations each",
            limit: Some(Duration::from_secs(120)),
            run: |seed| suites::comparison_principle(seed, &[2.5, 3.0], 10, 65),
        },
        Criterion {
            id: 6,
            title: "p-harmonic solver reproduces harmonic and affine data",
            limit: None,
            run: |_| suites::solver_validation(),
        },
        Criterion {
            id: 7,
            title: "Barenblatt defect identity by finite differences (p = 3, n = 2, a in {0.5, 2})",
            limit: None,
            run: |seed| vec![suites::evolution_identity(seed, 30)],
        },
        Criterion {
            id: 8,
            title: "sign-change radius by bisection and two-bump defect",
            limit: None,
            run: |_| {
                let mut checks = vec![suites::sign_change_bracketing()];
                checks.extend(suites::two_bump_defect_checks());
                checks
            },
        },
    ]
}

fn main() -> ExitCode {
    // libtest-style flags (e.g. from `cargo test -- --nocapture`) are ignored
    let seed = DEFAULT_SEED;
    let mut failed = 0;
    for c in criteria() {
        let start = Instant::now();
        let checks = (c.run)(seed);
        let elapsed = start.elapsed();
        let within = c.limit.is_none_or(|l| elapsed <= l);
        let passed = within && checks.iter().all(|k| k.passed);
        if !passed {
            failed += 1;
        }
        let limit = c.limit.map_or("none".to_string(), |l| format!("{:.0?}", l));
        println!(
            "{} criterion {}: {} [{:.2?}, limit {}]",
            if passed { "PASS" } else { "FAIL" },
            c.id,
            c.title,
            elapsed,
            limit
        );
        for k in &checks {
            println!("    {k}");
        }
    }
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
