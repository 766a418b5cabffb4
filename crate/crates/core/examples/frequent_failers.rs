//! Three-sigma removal of tests that fail far more often than the rest.
//!
//! cargo run --example frequent_failers

use citcp::evaluation::{failure_counts, remove_frequent_failers, three_sigma_threshold};
use citcp::{Build, BuildHistory, BuildId, ExecutionRecord, TestId, Verdict};

fn main() -> citcp::Result<()> {
    // 49 tests fail once each; Flaky fails in all 50 builds
    let mut builds = Vec::new();
    for b in 1..=50u64 {
        let mut build = Build::new(BuildId(b), Vec::new());
        let mut fail = |path: String, failed: bool| -> citcp::Result<()> {
            build.records.push(ExecutionRecord {
                build: BuildId(b),
                test: TestId::new(path)?,
                verdict: if failed { Verdict::AssertionFailure } else { Verdict::Passed },
                duration_ms: 100,
            });
            Ok(())
        };
        fail("FlakyTest.java".into(), true)?;
        if b < 50 {
            fail(format!("T{b:02}Test.java"), true)?;
        }
        builds.push(build);
    }
    let history = BuildHistory::new(builds)?;
    let counts: Vec<u64> = failure_counts(&history).into_values().collect();
    println!("threshold {:.3}", three_sigma_threshold(&counts).unwrap());
    let (filtered, removed) = remove_frequent_failers(&history);
    println!("removed {removed:?}");
    println!(
        "failed builds before {} after {}",
        history.failed_builds().count(),
        filtered.failed_builds().count()
    );
    Ok(())
}
