use std::collections::{BTreeSet, HashMap};

use crate::model::{AssociationScores, Commit};

/// Occurrence lists of files over the change sets of a commit history.
///
/// Only commits that touch at least one file form a change set.
#[derive(Clone, Debug, Default)]
pub struct CoChangeIndex {
    total: usize,
    occurrences: HashMap<String, Vec<u32>>,
}

impl CoChangeIndex {
    pub fn from_commits(commits: &[Commit]) -> Self {
        let sets: Vec<BTreeSet<&str>> = commits
            .iter()
            .map(|c| c.changed_paths().collect::<BTreeSet<_>>())
            .filter(|s| !s.is_empty())
            .collect();
        Self::from_sets(&sets)
    }

    pub fn from_sets<S: AsRef<str>>(sets: &[BTreeSet<S>]) -> Self
    where
        S: Ord,
    {
        let mut occurrences: HashMap<String, Vec<u32>> = HashMap::new();
        let mut total = 0u32;
        for set in sets {
            if set.is_empty() {
                continue;
            }
            for f in set {
                occurrences
                    .entry(f.as_ref().to_string())
                    .or_default()
                    .push(total);
            }
            total += 1;
        }
        CoChangeIndex {
            total: total as usize,
            occurrences,
        }
    }

    /// Appends one commit's change set; commits touching no file are skipped.
    pub fn add_commit(&mut self, commit: &Commit) {
        let set: BTreeSet<&str> = commit.changed_paths().collect();
        if set.is_empty() {
            return;
        }
        for f in set {
            self.occurrences
                .entry(f.to_string())
                .or_default()
                .push(self.total as u32);
        }
        self.total += 1;
    }

    /// |CH|
    pub fn total(&self) -> usize {
        self.total
    }

    /// Number of change sets containing `f`.
    pub fn count(&self, f: &str) -> u64 {
        self.occurrences.get(f).map_or(0, |v| v.len() as u64)
    }

    /// Number of change sets containing both files.
    pub fn pair_count(&self, f: &str, g: &str) -> u64 {
        let (Some(a), Some(b)) = (self.occurrences.get(f), self.occurrences.get(g)) else {
            return 0;
        };
        let (mut i, mut j, mut n) = (0, 0, 0u64);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    pub fn scores(&self, f: &str, g: &str) -> AssociationScores {
        scores_from_counts(
            self.pair_count(f, g),
            self.count(f),
            self.count(g),
            self.total as u64,
        )
    }
}

/// support = p/|CH|, confidence = p/cnt(f), lift = p/(cnt(f)·cnt(g)); any
/// zero denominator yields 0.
pub fn scores_from_counts(pair: u64, cnt_f: u64, cnt_g: u64, total: u64) -> AssociationScores {
    if pair == 0 {
        return AssociationScores::default();
    }
    let ratio = |d: u64| if d == 0 { 0.0 } else { pair as f64 / d as f64 };
    AssociationScores {
        support: ratio(total),
        confidence: ratio(cnt_f),
        lift: ratio(cnt_f * cnt_g),
    }
}

/// Association scores of the pair (f, g) over the commit history.
pub fn association_scores(history: &[Commit], f: &str, g: &str) -> AssociationScores {
    CoChangeIndex::from_commits(history).scores(f, g)
}

/// Divides each score by the sum; all zeros when the sum is zero.
pub fn normalize_scores(scores: &[f64]) -> Vec<f64> {
    let sum: f64 = scores.iter().sum();
    if sum > 0.0 {
        scores.iter().map(|s| s / sum).collect()
    } else {
        vec![0.0; scores.len()]
    }
}
