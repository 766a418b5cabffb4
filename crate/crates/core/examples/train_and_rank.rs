//! Trains a ranking model on the failed builds before the last one, ranks
//! the last build, and saves the model as JSON.
//!
//! cargo run --release --example train_and_rank

use std::collections::BTreeSet;

use citcp::analysis::AnalyzerTable;
use citcp::classifier::KeywordClassifier;
use citcp::evaluation::{apfdc, measure_builds, train_until, EvalInputs, EvalOptions};
use citcp::ingest::{generate_synthetic_history, Dataset, SynthConfig};
use citcp::ranker::{heuristic_rank, Direction, RankingModel};

fn main() -> citcp::Result<()> {
    let dir = tempfile::tempdir()?;
    let config = SynthConfig { builds: 30, tests: 40, files: 80, ..SynthConfig::default() };
    generate_synthetic_history(&config, 5, dir.path())?;
    let dataset = Dataset::load(dir.path())?;
    let source = dataset.source()?;
    let inputs = EvalInputs {
        history: &dataset.history,
        commits: &dataset.commits,
        source: source.as_ref(),
        classifier: &KeywordClassifier,
        analyzers: AnalyzerTable::default(),
    };
    let target = dataset.history.failed_builds().last().expect("a failed build").clone();
    let options = EvalOptions::default();
    let model = train_until(&inputs, &options, target.id)?;
    println!("trained on {} rows; top features:", model.training_rows);
    for (name, splits) in model.feature_usage().into_iter().take(5) {
        println!("  {name:<30} {splits}");
    }

    let pos = dataset.history.position(target.id).unwrap();
    let matrix = measure_builds(&inputs, &options.features, &BTreeSet::from([pos]))?.remove(&pos).unwrap();
    let ranked = model.predict(&matrix)?;
    let failed = target.failed_tests();
    println!("\nbuild {} ranking (* = failed):", target.id);
    for (i, r) in ranked.ranked.iter().take(10).enumerate() {
        let mark = if failed.contains(&r.test) { '*' } else { ' ' };
        println!("{:>3} {mark} {:<34} {:.4}", i + 1, r.test, r.score);
    }
    let heuristic = heuristic_rank(&matrix, "F_FailRate_Total", Direction::Desc)?;
    println!("APFD_C model {:.3}, heuristic {:.3}", apfdc(&ranked.tests(), &target)?, apfdc(&heuristic.tests(), &target)?);

    let path = dir.path().join("model.json");
    model.save(&path)?;
    let back = RankingModel::load(&path)?;
    assert_eq!(back.predict(&matrix)?, ranked);
    println!("model JSON: {} bytes", std::fs::metadata(&path)?.len());
    Ok(())
}
