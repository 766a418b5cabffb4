//! Measures one build of a synthetic history and prints a few columns of
//! its 150-column feature matrix.
//!
//! cargo run --release --example feature_matrix

use std::collections::BTreeSet;

use citcp::analysis::AnalyzerTable;
use citcp::classifier::KeywordClassifier;
use citcp::evaluation::{measure_builds, EvalInputs};
use citcp::features::FeatureOptions;
use citcp::ingest::{generate_synthetic_history, Dataset, SynthConfig};
use citcp::FeatureGroup;

fn main() -> citcp::Result<()> {
    let dir = tempfile::tempdir()?;
    let config = SynthConfig { builds: 15, tests: 20, files: 40, ..SynthConfig::default() };
    generate_synthetic_history(&config, 1, dir.path())?;
    let dataset = Dataset::load(dir.path())?;
    let source = dataset.source()?;
    let inputs = EvalInputs {
        history: &dataset.history,
        commits: &dataset.commits,
        source: source.as_ref(),
        classifier: &KeywordClassifier,
        analyzers: AnalyzerTable::default(),
    };
    let pos = dataset.history.builds().len() - 1;
    let matrices = measure_builds(&inputs, &FeatureOptions::default(), &BTreeSet::from([pos]))?;
    let matrix = &matrices[&pos];
    let catalog = &matrix.catalog;

    println!("build {}: {} rows x {} columns", matrix.build, matrix.rows.len(), catalog.len());
    for g in FeatureGroup::ALL {
        println!("  {:<12} {:>3} columns", g.as_str(), catalog.indices_of_group(g).len());
    }
    let cols = ["F_FailRate_Total", "F_LastFailAge", "F_CovCCount", "F_SumCovCScore", "F_WSumCovCFaults"];
    println!("\n{:<32} {}", "test", cols.join("  "));
    for row in matrix.rows.iter().take(8) {
        let vals: Vec<String> = cols
            .iter()
            .map(|c| format!("{:>w$.3}", row.values[catalog.index_of(c).unwrap()], w = c.len()))
            .collect();
        println!("{:<32} {}", row.test, vals.join("  "));
    }
    Ok(())
}
