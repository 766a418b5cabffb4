//! Retraining-window decay on a history whose test coverage is re-drawn
//! every five builds: models and their snapshots go stale as the window grows.
//!
//! cargo run --release --example decay_curve [seed]

use citcp::analysis::AnalyzerTable;
use citcp::classifier::KeywordClassifier;
use citcp::evaluation::{decay_experiment, EvalInputs, EvalOptions};
use citcp::ingest::{generate_synthetic_history, Dataset, SynthConfig};

fn main() -> citcp::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let dir = tempfile::tempdir()?;
    let config = SynthConfig {
        drift_period: Some(5),
        ..SynthConfig::default()
    };
    generate_synthetic_history(&config, seed, dir.path())?;
    let dataset = Dataset::load(dir.path())?;
    let source = dataset.source()?;
    let inputs = EvalInputs {
        history: &dataset.history,
        commits: &dataset.commits,
        source: source.as_ref(),
        classifier: &KeywordClassifier,
        analyzers: AnalyzerTable::default(),
    };
    let curve = decay_experiment(&inputs, &EvalOptions::default())?;
    println!("rw  mean_apfdc  pairs");
    for p in &curve.points {
        println!("{:>2}  {:>10.4}  {:>5}", p.rw, p.mean_apfdc, p.n_pairs);
    }
    if let Some(slope) = curve.slope(0..=11) {
        println!("least-squares slope over rw 0..=11: {slope:.5}");
    }
    Ok(())
}
