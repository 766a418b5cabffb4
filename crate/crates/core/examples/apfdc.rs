//! Cost-cognizant APFD of a few orderings of one build.
//!
//! cargo run --example apfdc

use citcp::evaluation::{apfdc, optimal_ordering};
use citcp::{Build, BuildId, ExecutionRecord, TestId, Verdict};

fn main() -> citcp::Result<()> {
    let mut build = Build::new(BuildId(1), Vec::new());
    for (path, verdict, ms) in [
        ("ATest.java", Verdict::AssertionFailure, 5000),
        ("BTest.java", Verdict::Passed, 1000),
        ("CTest.java", Verdict::ExceptionFailure, 2000),
        ("DTest.java", Verdict::Passed, 8000),
    ] {
        build.records.push(ExecutionRecord {
            build: build.id,
            test: TestId::new(path)?,
            verdict,
            duration_ms: ms,
        });
    }

    let optimal = optimal_ordering(&build).tests();
    let mut worst = optimal.clone();
    worst.reverse();
    let alphabetical = build.tests();

    for (name, order) in [("optimal", &optimal), ("alphabetical", &alphabetical), ("reversed", &worst)] {
        let names: Vec<&str> = order.iter().map(TestId::as_str).collect();
        println!("{name:>12}  {:.4}  {}", apfdc(order, &build)?, names.join(" "));
    }
    Ok(())
}
