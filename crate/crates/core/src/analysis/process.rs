use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::catalog::PROCESS_METRICS;
use crate::error::{Error, Result};
use crate::model::{Commit, CommitId};

/// Share of a file's authored lines below which an author is a minor
/// contributor, in percent.
const MINOR_SHARE: f64 = 5.0;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProcessMetrics {
    pub commit_count: u32,
    pub distinct_dev_count: u32,
    pub owners_contribution: f64,
    pub minor_contributor_count: u32,
    pub owners_experience: f64,
    pub all_commiters_experience: f64,
}

impl ProcessMetrics {
    pub fn values(&self) -> [f64; PROCESS_METRICS.len()] {
        [
            self.commit_count as f64,
            self.distinct_dev_count as f64,
            self.owners_contribution,
            self.minor_contributor_count as f64,
            self.owners_experience,
            self.all_commiters_experience,
        ]
    }
}

#[derive(Clone, Debug, Default)]
struct FileHistory {
    commits: u32,
    /// author -> added + deleted lines
    authored: BTreeMap<String, u64>,
}

/// Running per-file and per-author line counts. Commits are added in history
/// order and metrics can be read at any point.
#[derive(Clone, Debug, Default)]
pub struct ProcessIndex {
    files: HashMap<String, FileHistory>,
    project: HashMap<String, u64>,
    project_total: u64,
}

impl ProcessIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_commits(commits: &[Commit]) -> Self {
        let mut index = Self::new();
        for c in commits {
            index.add_commit(c);
        }
        index
    }

    pub fn add_commit(&mut self, commit: &Commit) {
        for change in &commit.file_changes {
            let lines = change.lines_added as u64 + change.lines_deleted as u64;
            let file = self.files.entry(change.path.clone()).or_default();
            file.commits += 1;
            *file.authored.entry(commit.author.clone()).or_insert(0) += lines;
            *self.project.entry(commit.author.clone()).or_insert(0) += lines;
            self.project_total += lines;
        }
    }

    fn experience(&self, author: &str) -> f64 {
        if self.project_total == 0 {
            return 0.0;
        }
        100.0 * self.project.get(author).copied().unwrap_or(0) as f64 / self.project_total as f64
    }

    /// All zeros for a file no commit has touched.
    pub fn metrics(&self, path: &str) -> ProcessMetrics {
        let Some(file) = self.files.get(path) else {
            return ProcessMetrics::default();
        };
        let total: u64 = file.authored.values().sum();
        // BTreeMap order makes the owner tie-break the smallest author name
        let owner = file
            .authored
            .iter()
            .fold(None::<(&String, u64)>, |best, (a, &n)| match best {
                Some((_, m)) if m >= n => best,
                _ => Some((a, n)),
            });
        let (owners_contribution, minor_contributor_count) = if total == 0 {
            (0.0, 0)
        } else {
            let share = |n: u64| 100.0 * n as f64 / total as f64;
            (
                owner.map_or(0.0, |(_, n)| share(n)),
                file.authored.values().filter(|&&n| share(n) < MINOR_SHARE).count() as u32,
            )
        };
        let n = file.authored.len();
        let log_sum: f64 = file.authored.keys().map(|a| self.experience(a).ln()).sum();
        let all_commiters_experience = if n == 0 { 0.0 } else { (log_sum / n as f64).exp() };
        ProcessMetrics {
            commit_count: file.commits,
            distinct_dev_count: n as u32,
            owners_contribution,
            minor_contributor_count,
            owners_experience: owner.map_or(0.0, |(a, _)| self.experience(a)),
            all_commiters_experience,
        }
    }
}

/// Process metrics of `path` over `history` up to and including `as_of`.
pub fn compute_process_metrics(path: &str, history: &[Commit], as_of: &CommitId) -> Result<ProcessMetrics> {
    let end = history
        .iter()
        .position(|c| &c.id == as_of)
        .ok_or_else(|| Error::UnresolvableRef(as_of.0.clone()))?;
    Ok(ProcessIndex::from_commits(&history[..=end]).metrics(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FileChange;
    use proptest::prelude::*;

    fn commit(id: &str, author: &str, files: &[(&str, u32, u32)]) -> Commit {
        Commit {
            id: CommitId(id.into()),
            timestamp: 0,
            author: author.into(),
            message: String::new(),
            file_changes: files
                .iter()
                .map(|&(p, a, d)| FileChange {
                    path: p.into(),
                    lines_added: a,
                    lines_deleted: d,
                    ..Default::default()
                })
                .collect(),
        }
    }

    #[test]
    fn single_author() {
        let h = vec![
            commit("1", "ann", &[("a", 5, 0)]),
            commit("2", "ann", &[("a", 1, 1)]),
            commit("3", "ann", &[("a", 0, 2)]),
        ];
        let m = compute_process_metrics("a", &h, &CommitId("3".into())).unwrap();
        assert_eq!(m.commit_count, 3);
        assert_eq!(m.distinct_dev_count, 1);
        assert_eq!(m.owners_contribution, 100.0);
        assert_eq!(m.minor_contributor_count, 0);
    }

    #[test]
    fn minor_contributor_below_five_percent() {
        let h = vec![commit("1", "ann", &[("a", 96, 0)]), commit("2", "bob", &[("a", 2, 2)])];
        let m = compute_process_metrics("a", &h, &CommitId("2".into())).unwrap();
        assert_eq!(m.minor_contributor_count, 1);
        assert_eq!(m.owners_contribution, 96.0);
    }

    #[test]
    fn geometric_mean_of_experience() {
        // ann authors 10% of the project, bob 40%, carl the rest elsewhere
        let h = vec![
            commit("1", "ann", &[("f", 10, 0)]),
            commit("2", "bob", &[("f", 20, 0), ("g", 20, 0)]),
            commit("3", "carl", &[("h", 50, 0)]),
        ];
        let m = compute_process_metrics("f", &h, &CommitId("3".into())).unwrap();
        assert!((m.all_commiters_experience - 20.0).abs() < 1e-12);
        assert!((m.owners_experience - 40.0).abs() < 1e-12);
    }

    #[test]
    fn as_of_excludes_later_commits() {
        let h = vec![commit("1", "ann", &[("a", 1, 0)]), commit("2", "bob", &[("a", 1, 0)])];
        let m = compute_process_metrics("a", &h, &CommitId("1".into())).unwrap();
        assert_eq!(m.commit_count, 1);
        assert!(compute_process_metrics("a", &h, &CommitId("x".into())).is_err());
        assert_eq!(
            compute_process_metrics("never", &h, &CommitId("2".into())).unwrap(),
            ProcessMetrics::default()
        );
    }

    proptest! {
        #[test]
        fn bounded(edits in prop::collection::vec((0..4usize, 0..3usize, 0..50u32, 0..50u32), 1..30)) {
            let authors = ["a", "b", "c", "d"];
            let files = ["x", "y", "z"];
            let h: Vec<Commit> = edits.iter().enumerate()
                .map(|(i, &(a, f, ad, de))| commit(&i.to_string(), authors[a], &[(files[f], ad, de)]))
                .collect();
            let index = ProcessIndex::from_commits(&h);
            for f in files {
                let m = index.metrics(f);
                prop_assert!(m.minor_contributor_count <= m.distinct_dev_count);
                for p in [m.owners_contribution, m.owners_experience, m.all_commiters_experience] {
                    prop_assert!((0.0..=100.0 + 1e-9).contains(&p));
                }
            }
        }
    }
}
