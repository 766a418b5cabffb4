//! Static coverage: dependency graph, co-change association scores, and
//! previously detected fault (PDF) counts per file.

mod association;
mod graph;

use std::collections::BTreeMap;

pub use association::{association_scores, normalize_scores, scores_from_counts, CoChangeIndex};
pub use graph::{
    build_dependency_graph, build_with_index, cov_score, covered_files, impacted_files,
    DependencyGraph, EdgeStats,
};

use crate::classifier::{CommitClass, MessageClassifier};
use crate::model::Commit;

/// Per-file count of defect-fix commits.
pub type PdfTable = BTreeMap<String, u64>;

/// Counts, for every file, the commits in `history` that touch it and are
/// classified as defect fixes.
pub fn compute_pdf(history: &[Commit], classifier: &dyn MessageClassifier) -> PdfTable {
    let mut table = PdfTable::new();
    for commit in history {
        if classifier.classify(&commit.message) == CommitClass::DefectFix {
            for path in commit.changed_paths() {
                *table.entry(path.to_string()).or_insert(0) += 1;
            }
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::KeywordClassifier;
    use crate::model::{CommitId, FileChange};

    fn commit(msg: &str, files: &[&str]) -> Commit {
        Commit {
            id: CommitId(msg.into()),
            timestamp: 0,
            author: "dev".into(),
            message: msg.into(),
            file_changes: files
                .iter()
                .map(|f| FileChange {
                    path: f.to_string(),
                    ..Default::default()
                })
                .collect(),
        }
    }

    #[test]
    fn pdf_counts_defect_fixes() {
        let history = vec![
            commit("Fix null check", &["f", "g"]),
            commit("add logging", &["f"]),
            commit("bug in parser", &["f"]),
        ];
        let pdf = compute_pdf(&history, &KeywordClassifier);
        assert_eq!(pdf.get("f"), Some(&2));
        assert_eq!(pdf.get("g"), Some(&1));
        assert_eq!(pdf.get("h"), None);
        let none = compute_pdf(&history[1..2], &KeywordClassifier);
        assert!(none.is_empty());
    }

    #[test]
    fn pdf_is_monotone_in_history_length() {
        let history = vec![
            commit("fix a", &["f"]),
            commit("feature", &["f"]),
            commit("repair b", &["f", "g"]),
        ];
        let mut prev = PdfTable::new();
        for k in 0..=history.len() {
            let pdf = compute_pdf(&history[..k], &KeywordClassifier);
            for (f, c) in &prev {
                assert!(pdf.get(f).copied().unwrap_or(0) >= *c);
            }
            prev = pdf;
        }
    }
}
