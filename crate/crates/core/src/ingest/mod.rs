//! Loading histories: dataset CSV files, commit logs from git or JSON lines,
//! source snapshots, and the synthetic dataset generator.

mod dataset;
mod git;
mod source;
mod synth;

use std::path::Path;

pub use dataset::{
    ingest_exec_records, read_builds, read_commits_jsonl, read_exec_records, select_primary_job,
    write_builds, write_commits_jsonl, write_exec_records, BuildRow, DatasetLayout, ExecRow,
    BUILDS_CSV, COMMITS_JSONL, EXEC_RECORDS_CSV, PRIMARY_JOB, REPO_PATH_FILE,
};
pub use git::{ingest_git_history, resolve_ref, CatFile, GitSource};
pub use source::{DirSource, EmptySource, SourceFile, SourceStore};
pub use synth::{
    generate_synthetic_history, CoverageEpoch, GroundTruth, InjectedFailures, SynthConfig,
    GROUND_TRUTH_JSON,
};

use crate::error::Result;
use crate::model::{BuildHistory, CommitLog};

/// A loaded dataset: builds with their change sets attached, and the commit
/// log they refer to.
pub struct Dataset {
    pub layout: DatasetLayout,
    pub history: BuildHistory,
    pub commits: CommitLog,
}

impl Dataset {
    /// Reads `builds.csv` and `exec_records.csv`, then commits from
    /// `commits.jsonl` or, failing that, from the repository.
    pub fn load(root: &Path) -> Result<Self> {
        let layout = DatasetLayout::new(root);
        let mut history = ingest_exec_records(&layout)?;
        let commits = if layout.commits_jsonl().is_file() {
            read_commits_jsonl(&layout.commits_jsonl())?
        } else if let Some(repo) = layout.repo() {
            ingest_git_history(&repo, "HEAD")?
        } else {
            Vec::new()
        };
        let commits = CommitLog::new(commits);
        history.attach_changes(&commits);
        Ok(Dataset { layout, history, commits })
    }

    /// Source snapshots from the repository, the `tree/` directory, or
    /// nothing.
    pub fn source(&self) -> Result<Box<dyn SourceStore>> {
        if let Some(repo) = self.layout.repo() {
            return Ok(Box::new(GitSource::open(&repo)?));
        }
        let tree = self.layout.tree_dir();
        if tree.is_dir() {
            return Ok(Box::new(DirSource::new(tree)));
        }
        Ok(Box::new(EmptySource))
    }
}
