//! Defect-fix commit classification.
//!
//! Messages are tokenized by [`preprocess_message`], turned into TF-IDF
//! vectors and scored by a logistic gradient-boosted tree ensemble. Without a
//! trained model the [`KeywordClassifier`] is used.

mod text;
mod tfidf;

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use text::{is_stopword, preprocess_message, URL_TOKEN};
pub use tfidf::{TfidfVocabulary, VocabEntry};

use crate::error::{Error, Result};
use crate::ranker::tree::{grow, BinnedData, GrowParams, Tree};

pub const CLASSIFIER_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CommitClass {
    DefectFix,
    NonDefect,
}

impl CommitClass {
    pub fn label(self) -> u8 {
        match self {
            CommitClass::DefectFix => 1,
            CommitClass::NonDefect => 0,
        }
    }
}

pub trait MessageClassifier: Send + Sync {
    fn classify(&self, message: &str) -> CommitClass;
}

const KEYWORDS: [&str; 6] = ["fix", "bug", "defect", "patch", "fault", "repair"];
const FIX_PREFIXES: [&str; 2] = ["hot", "quick"];

fn is_keyword_token(token: &str) -> bool {
    if KEYWORDS.contains(&token) {
        return true;
    }
    // compounds such as "bugfix" or "hotfix"
    (1..token.len()).any(|i| {
        token.is_char_boundary(i) && {
            let (a, b) = token.split_at(i);
            (KEYWORDS.contains(&a) || FIX_PREFIXES.contains(&a)) && KEYWORDS.contains(&b)
        }
    })
}

/// Defect fix iff a stemmed token is one of fix, bug, defect, patch, fault,
/// repair or a compound of them.
#[derive(Clone, Copy, Debug, Default)]
pub struct KeywordClassifier;

impl MessageClassifier for KeywordClassifier {
    fn classify(&self, message: &str) -> CommitClass {
        classify_keyword_fallback(message)
    }
}

pub fn classify_keyword_fallback(message: &str) -> CommitClass {
    if preprocess_message(message)
        .iter()
        .any(|t| is_keyword_token(t))
    {
        CommitClass::DefectFix
    } else {
        CommitClass::NonDefect
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    pub trees: usize,
    pub learning_rate: f64,
    pub max_leaves: usize,
    pub lambda: f64,
    pub max_terms: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            trees: 100,
            learning_rate: 0.3,
            max_leaves: 32,
            lambda: 1.0,
            max_terms: 1000,
            threshold: 0.5,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommitClassifier {
    pub format_version: u32,
    pub vocabulary: TfidfVocabulary,
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    pub decision_threshold: f64,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl CommitClassifier {
    /// Fits vocabulary and trees on the whole corpus.
    pub fn fit(corpus: &[(String, CommitClass)], params: &BoostParams) -> Result<Self> {
        let docs: Vec<Vec<String>> = corpus.iter().map(|(m, _)| preprocess_message(m)).collect();
        let labels: Vec<f64> = corpus.iter().map(|(_, c)| c.label() as f64).collect();
        Self::fit_tokens(&docs, &labels, params)
    }

    fn fit_tokens(docs: &[Vec<String>], labels: &[f64], params: &BoostParams) -> Result<Self> {
        let positives = labels.iter().filter(|&&y| y > 0.5).count();
        if positives == 0 || positives == labels.len() {
            return Err(Error::DegenerateCorpus);
        }
        let vocabulary = TfidfVocabulary::fit(docs, params.max_terms);
        let width = vocabulary.len();
        let n = docs.len();
        let mut x = Vec::with_capacity(n * width);
        for d in docs {
            x.extend(vocabulary.transform(d));
        }
        let prior = positives as f64 / n as f64;
        let init = (prior / (1.0 - prior)).ln();
        let mut trees = Vec::with_capacity(params.trees);
        if width > 0 {
            let data = BinnedData::new(&x, n, width);
            let rows: Vec<u32> = (0..n as u32).collect();
            let features: Vec<usize> = (0..width).collect();
            let grow_params = GrowParams {
                max_leaves: params.max_leaves,
                min_leaf: 1,
                lambda: params.lambda,
            };
            let mut margin = vec![init; n];
            let mut grad = vec![0.0; n];
            let mut hess = vec![0.0; n];
            for _ in 0..params.trees {
                for i in 0..n {
                    let p = sigmoid(margin[i]);
                    grad[i] = p - labels[i];
                    hess[i] = (p * (1.0 - p)).max(1e-12);
                }
                let tree = grow(&data, &rows, &features, &grad, &hess, grow_params);
                if tree.split_count() == 0 {
                    break;
                }
                for i in 0..n {
                    margin[i] += params.learning_rate * tree.predict(&x[i * width..(i + 1) * width]);
                }
                trees.push(tree);
            }
        }
        Ok(CommitClassifier {
            format_version: CLASSIFIER_FORMAT_VERSION,
            vocabulary,
            init,
            learning_rate: params.learning_rate,
            trees,
            decision_threshold: params.threshold,
        })
    }

    /// Probability of the defect-fix class; 0 for messages with no known token.
    pub fn probability(&self, message: &str) -> f64 {
        self.probability_tokens(&preprocess_message(message))
    }

    fn probability_tokens(&self, tokens: &[String]) -> f64 {
        let v = self.vocabulary.transform(tokens);
        if v.iter().all(|&x| x == 0.0) {
            return 0.0;
        }
        let margin = self.init
            + self
                .trees
                .iter()
                .map(|t| self.learning_rate * t.predict(&v))
                .sum::<f64>();
        sigmoid(margin)
    }

    fn class_of(&self, p: f64) -> CommitClass {
        if p >= self.decision_threshold {
            CommitClass::DefectFix
        } else {
            CommitClass::NonDefect
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let clf: CommitClassifier = serde_json::from_str(text)?;
        if clf.format_version != CLASSIFIER_FORMAT_VERSION {
            return Err(Error::FormatVersion(clf.format_version));
        }
        Ok(clf)
    }
}

impl MessageClassifier for CommitClassifier {
    fn classify(&self, message: &str) -> CommitClass {
        self.class_of(self.probability(message))
    }
}

pub fn classify(clf: &CommitClassifier, message: &str) -> CommitClass {
    clf.classify(message)
}

/// Trains on the full corpus and reports mean accuracy over `folds`
/// stratified cross-validation folds.
pub fn train_classifier(
    corpus: &[(String, CommitClass)],
    folds: usize,
    params: &BoostParams,
) -> Result<(CommitClassifier, f64)> {
    if folds < 2 {
        return Err(Error::InvalidConfig("at least two folds are required".into()));
    }
    let docs: Vec<Vec<String>> = corpus.iter().map(|(m, _)| preprocess_message(m)).collect();
    let labels: Vec<f64> = corpus.iter().map(|(_, c)| c.label() as f64).collect();
    let mut pos: Vec<usize> = (0..corpus.len()).filter(|&i| labels[i] > 0.5).collect();
    let mut neg: Vec<usize> = (0..corpus.len()).filter(|&i| labels[i] <= 0.5).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::DegenerateCorpus);
    }
    if pos.len() < folds || neg.len() < folds {
        return Err(Error::InvalidConfig(format!(
            "each class needs at least {folds} examples"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut fold_of = vec![0usize; corpus.len()];
    for (k, &i) in pos.iter().chain(&neg).enumerate() {
        fold_of[i] = k % folds;
    }
    let mut total = 0.0;
    for fold in 0..folds {
        let (mut train_docs, mut train_labels) = (Vec::new(), Vec::new());
        for i in 0..corpus.len() {
            if fold_of[i] != fold {
                train_docs.push(docs[i].clone());
                train_labels.push(labels[i]);
            }
        }
        let clf = CommitClassifier::fit_tokens(&train_docs, &train_labels, params)?;
        let (mut correct, mut n) = (0usize, 0usize);
        for i in (0..corpus.len()).filter(|&i| fold_of[i] == fold) {
            let predicted = clf.class_of(clf.probability_tokens(&docs[i]));
            correct += usize::from(predicted.label() as f64 == labels[i]);
            n += 1;
        }
        total += correct as f64 / n as f64;
    }
    let clf = CommitClassifier::fit_tokens(&docs, &labels, params)?;
    Ok((clf, total / folds as f64))
}

/// Reads a labeled corpus CSV with header `label,message`, label 0 or 1.
pub fn read_corpus(path: &Path) -> Result<Vec<(String, CommitClass)>> {
    let file = path.display().to_string();
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::schema(&file, 1, format!("missing column `{name}`")))
    };
    let (label_col, message_col) = (col("label")?, col("message")?);
    let mut corpus = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let class = match row.get(label_col).map(str::trim) {
            Some("1") => CommitClass::DefectFix,
            Some("0") => CommitClass::NonDefect,
            other => {
                return Err(Error::schema(
                    &file,
                    line,
                    format!("label must be 0 or 1, got {other:?}"),
                ))
            }
        };
        let message = row
            .get(message_col)
            .ok_or_else(|| Error::schema(&file, line, "missing message"))?;
        corpus.push((message.to_string(), class));
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyword_examples() {
        assert_eq!(classify_keyword_fallback("Bugfix for issue 12"), CommitClass::DefectFix);
        assert_eq!(classify_keyword_fallback("Add feature flags"), CommitClass::NonDefect);
        assert_eq!(classify_keyword_fallback("refactor tests"), CommitClass::NonDefect);
        assert_eq!(classify_keyword_fallback("hotfix: patched leak"), CommitClass::DefectFix);
        assert_eq!(classify_keyword_fallback(""), CommitClass::NonDefect);
    }

    #[test]
    fn compound_detection() {
        assert!(is_keyword_token("bugfix"));
        assert!(is_keyword_token("hotfix"));
        assert!(!is_keyword_token("prefix"));
        assert!(!is_keyword_token("debug"));
    }

    fn toy_corpus() -> Vec<(String, CommitClass)> {
        let mut c = Vec::new();
        for i in 0..20 {
            c.push((format!("fix crash in module {i}"), CommitClass::DefectFix));
            c.push((format!("add option for module {i}"), CommitClass::NonDefect));
        }
        c
    }

    #[test]
    fn single_class_corpus_is_degenerate() {
        let c: Vec<_> = toy_corpus()
            .into_iter()
            .filter(|(_, k)| *k == CommitClass::DefectFix)
            .collect();
        assert!(matches!(
            train_classifier(&c, 5, &BoostParams::default()),
            Err(Error::DegenerateCorpus)
        ));
    }

    #[test]
    fn trained_model_behaviour() {
        let (clf, acc) = train_classifier(&toy_corpus(), 5, &BoostParams::default()).unwrap();
        assert_eq!(acc, 1.0);
        assert_eq!(clf.classify(""), CommitClass::NonDefect);
        assert_eq!(clf.classify("fix crash in parser"), CommitClass::DefectFix);
        for (m, k) in toy_corpus() {
            assert_eq!(clf.classify(&m), k);
        }
        let back = CommitClassifier::from_json(&clf.to_json().unwrap()).unwrap();
        assert_eq!(back, clf);
    }
}
