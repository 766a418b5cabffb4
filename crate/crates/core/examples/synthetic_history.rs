//! Writes a synthetic dataset (git repository plus CSV files) and loads it.
//!
//! cargo run --example synthetic_history [out_dir]

use citcp::ingest::{generate_synthetic_history, Dataset, SynthConfig};

fn main() -> citcp::Result<()> {
    let keep = std::env::args().nth(1);
    let tmp = tempfile::tempdir()?;
    let out = keep.as_deref().map(std::path::Path::new).unwrap_or(tmp.path());

    let config = SynthConfig {
        builds: 20,
        tests: 30,
        files: 60,
        flaky_tests: 1,
        ..SynthConfig::default()
    };
    let truth = generate_synthetic_history(&config, 42, out)?;
    let dataset = Dataset::load(out)?;

    println!("{} commits, {} builds", dataset.commits.commits().len(), dataset.history.builds().len());
    println!("flaky: {:?}", truth.flaky_tests);
    for build in dataset.history.builds().iter().take(6) {
        println!(
            "build {:>2}: {} commits, {:>2} changed files, {:>2} tests, {} failed",
            build.id,
            build.change_set.commits.len(),
            build.change_set.changed_files.len(),
            build.records.len(),
            build.failed_tests().len()
        );
    }
    Ok(())
}
