//! Trains the TF-IDF + boosted-tree commit classifier on a small labeled
//! corpus and compares it with the keyword rule.
//!
//! cargo run --release --example commit_classifier [corpus.csv]
//!
//! The optional corpus is a CSV with header `label,message`.

use citcp::classifier::{
    classify_keyword_fallback, preprocess_message, read_corpus, train_classifier, BoostParams, CommitClass,
    MessageClassifier,
};

fn toy_corpus() -> Vec<(String, CommitClass)> {
    let fixes = [
        "Fix NPE in parser when input is empty",
        "fixed crash on startup, closes #12",
        "Bugfix: off-by-one in pagination",
        "Repair broken serialization of dates",
        "hotfix for login timeout",
        "Patch memory leak in cache eviction",
        "Resolve fault in retry handling",
        "fixes wrong rounding in invoice totals",
    ];
    let others = [
        "Add CSV export to reports",
        "Update README with build instructions",
        "Refactor session handling into module",
        "Bump dependency versions",
        "Introduce dark mode setting",
        "Rename internal helpers",
        "Improve logging around uploads",
        "Add integration tests for search",
    ];
    let mut corpus = Vec::new();
    for round in 0..5 {
        for m in fixes {
            corpus.push((format!("{m} ({round})"), CommitClass::DefectFix));
        }
        for m in others {
            corpus.push((format!("{m} ({round})"), CommitClass::NonDefect));
        }
    }
    corpus
}

fn main() -> citcp::Result<()> {
    let corpus = match std::env::args().nth(1) {
        Some(path) => read_corpus(path.as_ref())?,
        None => toy_corpus(),
    };
    let (clf, accuracy) = train_classifier(&corpus, 5, &BoostParams::default())?;
    println!("{} messages, five-fold accuracy {accuracy:.3}", corpus.len());

    for message in [
        "Fixes #431: NullPointerException in https://example.org/ticket",
        "Add a new chart type",
        "repaired flaky upload test",
    ] {
        println!(
            "{message:?}\n  tokens {:?}\n  model {:?} ({:.2}), keywords {:?}",
            preprocess_message(message),
            clf.classify(message),
            clf.probability(message),
            classify_keyword_fallback(message)
        );
    }
    Ok(())
}
