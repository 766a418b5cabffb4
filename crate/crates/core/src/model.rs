//! Domain types shared by every stage of the pipeline.
//!
//! Nothing in here performs I/O. Constructors check the invariants that are
//! cheap to check; everything is immutable once built and `Send + Sync`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordinal of a CI build. Ordering equals chronological ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BuildId(pub u64);

impl fmt::Display for BuildId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A test case, identified by the repository-relative path of its source file.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TestId(String);

impl TestId {
    pub fn new(path: impl Into<String>) -> Result<Self> {
        let path = path.into();
        if path.trim().is_empty() {
            return Err(Error::InvalidConfig("test path must be non-empty".into()));
        }
        Ok(TestId(path))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for TestId {
    type Error = Error;
    fn try_from(value: String) -> Result<Self> {
        TestId::new(value)
    }
}

impl From<TestId> for String {
    fn from(value: TestId) -> Self {
        value.0
    }
}

impl fmt::Display for TestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Passed,
    AssertionFailure,
    ExceptionFailure,
    /// Failure reported without assertion/exception detail. Counts toward the
    /// failure rate only.
    UnknownFailure,
}

impl Verdict {
    pub fn is_failed(self) -> bool {
        is_failed(self)
    }

    /// Numeric code used in `exec_records.csv`.
    pub fn code(self) -> u8 {
        match self {
            Verdict::Passed => 0,
            Verdict::AssertionFailure => 1,
            Verdict::ExceptionFailure => 2,
            Verdict::UnknownFailure => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Verdict::Passed),
            1 => Some(Verdict::AssertionFailure),
            2 => Some(Verdict::ExceptionFailure),
            3 => Some(Verdict::UnknownFailure),
            _ => None,
        }
    }
}

pub fn is_failed(verdict: Verdict) -> bool {
    !matches!(verdict, Verdict::Passed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExecutionRecord {
    pub build: BuildId,
    pub test: TestId,
    pub verdict: Verdict,
    pub duration_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CommitId(pub String);

impl fmt::Display for CommitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Change of the low-risk / high-risk line profile of one DMM property,
/// measured as (after - before) over all units of a file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskDelta {
    pub low: i64,
    pub high: i64,
}

impl RiskDelta {
    /// Splits the delta into (low-risk change, high-risk change) line counts.
    /// Adding low-risk code or removing high-risk code is a low-risk change;
    /// adding high-risk code or removing low-risk code is a high-risk change.
    pub fn good_bad(self) -> (u64, u64) {
        let mut good = 0u64;
        let mut bad = 0u64;
        if self.low >= 0 {
            good += self.low as u64;
        } else {
            bad += self.low.unsigned_abs();
        }
        if self.high >= 0 {
            bad += self.high as u64;
        } else {
            good += self.high.unsigned_abs();
        }
        (good, bad)
    }
}

/// Per-file unit risk deltas for the three DMM properties.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitRisk {
    pub size: RiskDelta,
    pub complexity: RiskDelta,
    pub interfacing: RiskDelta,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    pub path: String,
    pub lines_added: u32,
    pub lines_deleted: u32,
    /// Start lines (1-based, post-change) of added chunks.
    pub added_chunks: Vec<u32>,
    /// Start lines (1-based, pre-change) of deleted chunks.
    pub deleted_chunks: Vec<u32>,
    pub risk: Option<UnitRisk>,
}

impl FileChange {
    pub fn validate(&self) -> Result<()> {
        if self.path.is_empty() {
            return Err(Error::Invariant("file change with empty path".into()));
        }
        if self.added_chunks.iter().chain(&self.deleted_chunks).any(|&l| l == 0) {
            return Err(Error::Invariant(format!(
                "chunk start line 0 in {}",
                self.path
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commit {
    pub id: CommitId,
    /// Seconds since the Unix epoch (author time).
    pub timestamp: i64,
    pub author: String,
    pub message: String,
    pub file_changes: Vec<FileChange>,
}

impl Commit {
    pub fn changed_paths(&self) -> impl Iterator<Item = &str> {
        self.file_changes.iter().map(|c| c.path.as_str())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeSet {
    pub build: Option<BuildId>,
    pub commits: Vec<CommitId>,
    /// chn(b)
    pub changed_files: BTreeSet<String>,
    /// imp(b); filled once a dependency graph is available.
    pub impacted_files: BTreeSet<String>,
}

impl ChangeSet {
    pub fn new(build: BuildId, commits: Vec<CommitId>) -> Self {
        ChangeSet {
            build: Some(build),
            commits,
            ..Default::default()
        }
    }

    /// Replaces imp(b), dropping anything that is also changed.
    pub fn set_impacted(&mut self, impacted: BTreeSet<String>) {
        self.impacted_files = impacted
            .into_iter()
            .filter(|f| !self.changed_files.contains(f))
            .collect();
    }

    pub fn is_disjoint(&self) -> bool {
        self.changed_files.is_disjoint(&self.impacted_files)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Build {
    pub id: BuildId,
    pub change_set: ChangeSet,
    pub records: Vec<ExecutionRecord>,
    /// ISO-8601 wall-clock time as given in `builds.csv`.
    pub wall_clock: Option<String>,
}

impl Build {
    pub fn new(id: BuildId, commits: Vec<CommitId>) -> Self {
        Build {
            id,
            change_set: ChangeSet::new(id, commits),
            records: Vec::new(),
            wall_clock: None,
        }
    }

    pub fn is_failed(&self) -> bool {
        self.records.iter().any(|r| r.verdict.is_failed())
    }

    pub fn record(&self, test: &TestId) -> Option<&ExecutionRecord> {
        self.records.iter().find(|r| &r.test == test)
    }

    /// Tests executed in this build in `TestId` order.
    pub fn tests(&self) -> Vec<TestId> {
        let mut tests: Vec<TestId> = self.records.iter().map(|r| r.test.clone()).collect();
        tests.sort();
        tests.dedup();
        tests
    }

    pub fn failed_tests(&self) -> BTreeSet<TestId> {
        self.records
            .iter()
            .filter(|r| r.verdict.is_failed())
            .map(|r| r.test.clone())
            .collect()
    }
}

/// Builds in chronological order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildHistory {
    builds: Vec<Build>,
}

impl BuildHistory {
    pub fn new(mut builds: Vec<Build>) -> Result<Self> {
        builds.sort_by_key(|b| b.id);
        for pair in builds.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::Invariant(format!("duplicate build id {}", pair[0].id)));
            }
        }
        for build in &builds {
            let mut seen = BTreeSet::new();
            for record in &build.records {
                if record.build != build.id {
                    return Err(Error::Invariant(format!(
                        "record for build {} stored under build {}",
                        record.build, build.id
                    )));
                }
                if !seen.insert(&record.test) {
                    return Err(Error::Invariant(format!(
                        "two records for test {} in build {}",
                        record.test, build.id
                    )));
                }
            }
        }
        Ok(BuildHistory { builds })
    }

    pub fn builds(&self) -> &[Build] {
        &self.builds
    }

    pub fn builds_mut(&mut self) -> &mut [Build] {
        &mut self.builds
    }

    pub fn get(&self, id: BuildId) -> Option<&Build> {
        self.builds
            .binary_search_by_key(&id, |b| b.id)
            .ok()
            .map(|i| &self.builds[i])
    }

    pub fn position(&self, id: BuildId) -> Option<usize> {
        self.builds.binary_search_by_key(&id, |b| b.id).ok()
    }

    pub fn failed_builds(&self) -> impl Iterator<Item = &Build> {
        self.builds.iter().filter(|b| b.is_failed())
    }

    /// Fills chn(b) of every build from the commits it lists.
    pub fn attach_changes(&mut self, commits: &CommitLog) {
        for build in &mut self.builds {
            let mut changed = BTreeSet::new();
            for id in &build.change_set.commits {
                if let Some(commit) = commits.get(id) {
                    changed.extend(commit.changed_paths().map(str::to_owned));
                }
            }
            build.change_set.changed_files = changed;
            build.change_set.impacted_files.clear();
        }
    }
}

/// Commits in topological (parents first) order with an id index.
#[derive(Clone, Debug, Default)]
pub struct CommitLog {
    commits: Vec<Commit>,
    index: BTreeMap<CommitId, usize>,
}

impl CommitLog {
    pub fn new(commits: Vec<Commit>) -> Self {
        let index = commits
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id.clone(), i))
            .collect();
        CommitLog { commits, index }
    }

    pub fn commits(&self) -> &[Commit] {
        &self.commits
    }

    pub fn get(&self, id: &CommitId) -> Option<&Commit> {
        self.index.get(id).map(|&i| &self.commits[i])
    }

    pub fn position(&self, id: &CommitId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.commits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commits.is_empty()
    }

    /// Commits up to and including `position`.
    pub fn prefix(&self, position: Option<usize>) -> &[Commit] {
        match position {
            Some(p) => &self.commits[..=p.min(self.commits.len().saturating_sub(1))],
            None => &[],
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AssociationScores {
    pub support: f64,
    pub confidence: f64,
    pub lift: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(build: u64, test: &str, verdict: Verdict) -> ExecutionRecord {
        ExecutionRecord {
            build: BuildId(build),
            test: TestId::new(test).unwrap(),
            verdict,
            duration_ms: 10,
        }
    }

    #[test]
    fn failure_kinds() {
        assert!(!is_failed(Verdict::Passed));
        assert!(is_failed(Verdict::AssertionFailure));
        assert!(is_failed(Verdict::ExceptionFailure));
        assert!(is_failed(Verdict::UnknownFailure));
    }

    #[test]
    fn verdict_codes_round_trip() {
        for code in 0..4 {
            assert_eq!(Verdict::from_code(code).unwrap().code(), code);
        }
        assert!(Verdict::from_code(4).is_none());
    }

    #[test]
    fn build_failure_flag_is_or_of_records() {
        let mut b = Build::new(BuildId(1), vec![]);
        assert!(!b.is_failed());
        b.records.push(rec(1, "A", Verdict::Passed));
        assert!(!b.is_failed());
        b.records.push(rec(1, "B", Verdict::ExceptionFailure));
        assert!(b.is_failed());
    }

    #[test]
    fn empty_test_id_rejected() {
        assert!(TestId::new("").is_err());
        assert!(TestId::new("  ").is_err());
    }

    #[test]
    fn history_rejects_duplicate_records() {
        let mut b = Build::new(BuildId(1), vec![]);
        b.records.push(rec(1, "A", Verdict::Passed));
        b.records.push(rec(1, "A", Verdict::Passed));
        assert!(BuildHistory::new(vec![b]).is_err());
    }

    #[test]
    fn impacted_is_kept_disjoint_from_changed() {
        let mut cs = ChangeSet::new(BuildId(1), vec![]);
        cs.changed_files.insert("a".into());
        cs.set_impacted(["a".to_string(), "b".to_string()].into_iter().collect());
        assert!(cs.is_disjoint());
        assert_eq!(cs.impacted_files.len(), 1);
    }

    #[test]
    fn risk_delta_good_bad() {
        assert_eq!(RiskDelta { low: 10, high: 0 }.good_bad(), (10, 0));
        assert_eq!(RiskDelta { low: -4, high: -6 }.good_bad(), (6, 4));
        assert_eq!(RiskDelta { low: 0, high: 3 }.good_bad(), (0, 3));
    }
}
