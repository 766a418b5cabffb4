#![allow(dead_code)]

use std::path::Path;

use citcp::analysis::AnalyzerTable;
use citcp::classifier::{CommitClass, KeywordClassifier};
use citcp::evaluation::EvalInputs;
use citcp::ingest::{generate_synthetic_history, Dataset, SourceStore, SynthConfig};
use citcp::{Build, BuildId, ExecutionRecord, TestId, Verdict};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A build of `n` tests with random durations and at least one failure.
pub fn random_build(rng: &mut ChaCha8Rng, n: usize) -> Build {
    let mut b = Build::new(BuildId(1), Vec::new());
    let forced = rng.random_range(0..n);
    for i in 0..n {
        let failed = i == forced || rng.random::<f64>() < 0.3;
        let verdict = if failed { Verdict::AssertionFailure } else { Verdict::Passed };
        b.records.push(ExecutionRecord {
            build: b.id,
            test: TestId::new(format!("T{i}Test.java")).unwrap(),
            verdict,
            duration_ms: rng.random_range(0..5000),
        });
    }
    b
}

/// APFD_C written directly from its definition: for the i-th fault, with TF_i
/// the 1-based position of its detecting test,
/// (sum_{j = TF_i}^{n} t_j - t_{TF_i} / 2), summed over faults and divided by
/// (sum_j t_j) * m. All-zero costs count as unit costs.
pub fn apfdc_direct(order: &[TestId], build: &Build) -> f64 {
    let n = order.len();
    let mut t: Vec<f64> = order.iter().map(|id| build.record(id).unwrap().duration_ms as f64).collect();
    if t.iter().all(|&c| c == 0.0) {
        t = vec![1.0; n];
    }
    let mut numerator = 0.0;
    let mut m = 0;
    for tf in 1..=n {
        if build.record(&order[tf - 1]).unwrap().verdict.is_failed() {
            m += 1;
            let mut tail = 0.0;
            for j in tf..=n {
                tail += t[j - 1];
            }
            numerator += tail - t[tf - 1] / 2.0;
        }
    }
    let total: f64 = t.iter().sum();
    numerator / (total * m as f64)
}

/// Every permutation of `items`.
pub fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head.clone());
            out.push(p);
        }
    }
    out
}

const FIX_PHRASES: [&str; 10] = [
    "fix", "fixed", "fixes", "bug", "bugfix", "hotfix", "defect", "patch", "fault", "repair",
];
const TOPICS: [&str; 24] = [
    "parser", "login", "cache", "scheduler", "report", "export", "upload", "session", "invoice", "search",
    "config", "logging", "metrics", "router", "renderer", "database", "migration", "auth", "queue", "socket",
    "layout", "theme", "pricing", "cart",
];
const NEUTRAL_VERBS: [&str; 10] = [
    "add", "update", "refactor", "rename", "document", "improve", "introduce", "bump", "extract", "simplify",
];
const FILLER: [&str; 10] = ["the", "for", "handling", "module", "support", "tests", "code", "logic", "api", "flow"];

/// `n` messages, half of them defect fixes. Fix messages contain one of the
/// fix keywords; the others never do.
pub fn keyword_corpus(rng: &mut ChaCha8Rng, n: usize) -> Vec<(String, CommitClass)> {
    (0..n)
        .map(|i| {
            let fix = i % 2 == 0;
            let mut words: Vec<&str> = Vec::new();
            let lead = if fix { FIX_PHRASES.choose(rng) } else { NEUTRAL_VERBS.choose(rng) };
            words.push(lead.unwrap());
            for _ in 0..rng.random_range(2..6) {
                let pool: &[&str] = if rng.random::<f64>() < 0.5 { &TOPICS } else { &FILLER };
                words.push(pool.choose(rng).unwrap());
            }
            if rng.random::<f64>() < 0.3 {
                let at = rng.random_range(1..words.len());
                let w = words.remove(0);
                words.insert(at, w);
            }
            let class = if fix { CommitClass::DefectFix } else { CommitClass::NonDefect };
            (format!("{} (#{})", words.join(" "), rng.random_range(1..999)), class)
        })
        .collect()
}

pub struct Loaded {
    pub dir: tempfile::TempDir,
    pub dataset: Dataset,
    pub source: Box<dyn SourceStore>,
}

impl Loaded {
    pub fn inputs(&self) -> EvalInputs<'_> {
        EvalInputs {
            history: &self.dataset.history,
            commits: &self.dataset.commits,
            source: self.source.as_ref(),
            classifier: &KeywordClassifier,
            analyzers: AnalyzerTable::default(),
        }
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }
}

pub fn synthetic(config: &SynthConfig, seed: u64) -> Loaded {
    let dir = tempfile::tempdir().unwrap();
    generate_synthetic_history(config, seed, dir.path()).unwrap();
    let dataset = Dataset::load(dir.path()).unwrap();
    let source = dataset.source().unwrap();
    Loaded { dir, dataset, source }
}
