//! Generates the synthetic dataset, replays it and compares the learned
//! ranker with the heuristic, random and optimal orderings.
//!
//! cargo run --release --example evaluate_pipeline [seed]

use std::time::Instant;

use citcp::analysis::AnalyzerTable;
use citcp::classifier::KeywordClassifier;
use citcp::evaluation::{run_pipeline_eval, EvalInputs, EvalOptions, Strategy};
use citcp::ingest::{generate_synthetic_history, Dataset, SynthConfig};

fn main() -> citcp::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let dir = tempfile::tempdir()?;
    let t = Instant::now();
    generate_synthetic_history(&SynthConfig::default(), seed, dir.path())?;
    let dataset = Dataset::load(dir.path())?;
    let source = dataset.source()?;
    println!("generated {} builds in {:.1?}", dataset.history.builds().len(), t.elapsed());

    let t = Instant::now();
    let inputs = EvalInputs {
        history: &dataset.history,
        commits: &dataset.commits,
        source: source.as_ref(),
        classifier: &KeywordClassifier,
        analyzers: AnalyzerTable::default(),
    };
    let report = run_pipeline_eval(&inputs, &EvalOptions::default())?;
    println!("evaluated {} builds in {:.1?}", report.evaluated_builds.len(), t.elapsed());
    for s in Strategy::ALL {
        let sum = report.summary(s).unwrap();
        println!("{:>10}  {:.3} +- {:.3}", s.as_str(), sum.mean, sum.sd);
    }
    println!("removed frequent failers: {}", report.removed_tests.len());
    println!("most used features:");
    for (name, count) in report.feature_usage.iter().take(8) {
        println!("  {name:<32} {count}");
    }
    Ok(())
}
