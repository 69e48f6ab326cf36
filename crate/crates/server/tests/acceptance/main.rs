//! Acceptance gate: one line per criterion, non-zero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

mod dsl;
mod headless;
mod ingestion;
mod quadrature;
mod reactive;
mod registry;
mod reproducibility;
mod stats;

type Criterion = (&'static str, fn() -> Result<String, String>);

const CRITERIA: &[Criterion] = &[
    ("reproducibility round trip", reproducibility::run),
    ("wilcoxon exactness", stats::wilcoxon_exactness),
    ("kernel fixtures", stats::kernel_fixtures),
    ("distribution functions", stats::distribution_functions),
    ("reactive engine", reactive::run),
    ("dsl", dsl::run),
    ("registry", registry::run),
    ("ingestion scale", ingestion::run),
    ("headless operation", headless::run),
];

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in CRITERIA {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(msg)
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name:<28} {detail} [{secs:.2} s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name:<28} {why} [{secs:.2} s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

/// Relative closeness with an absolute floor for values near zero.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}
