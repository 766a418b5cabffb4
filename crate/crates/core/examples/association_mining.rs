//! Support, confidence and lift of file pairs mined from co-changing commits.
//!
//! cargo run --example association_mining

use citcp::coverage::{normalize_scores, CoChangeIndex};
use std::collections::BTreeSet;

fn main() {
    let history: Vec<BTreeSet<&str>> = vec![
        ["f1", "f2", "f3"].into(),
        ["f1", "f3"].into(),
        ["f2"].into(),
        ["f1", "f2", "f3", "f4"].into(),
    ];
    let index = CoChangeIndex::from_sets(&history);
    println!("{} change sets", index.total());
    println!("pair      support  confidence  lift");
    for (f, g) in [("f1", "f3"), ("f3", "f1"), ("f1", "f2"), ("f2", "f4"), ("f1", "f5")] {
        let s = index.scores(f, g);
        println!("{f}->{g}   {:>7.4}  {:>10.4}  {:.4}", s.support, s.confidence, s.lift);
    }

    let confidences: Vec<f64> = ["f2", "f3", "f4"].iter().map(|g| index.scores("f1", g).confidence).collect();
    println!("normalized confidence of f1 -> (f2, f3, f4): {:?}", normalize_scores(&confidences));
}
