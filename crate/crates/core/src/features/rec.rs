use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::catalog::REC_FEATURES;
use crate::error::{Error, Result};
use crate::model::{BuildHistory, BuildId, TestId, Verdict};

pub const REC_LEN: usize = REC_FEATURES.len();

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecWindow {
    pub recent_size: usize,
}

impl Default for RecWindow {
    fn default() -> Self {
        RecWindow { recent_size: 6 }
    }
}

impl RecWindow {
    pub fn new(recent_size: usize) -> Result<Self> {
        if recent_size == 0 {
            return Err(Error::InvalidConfig("recent window must be at least 1".into()));
        }
        Ok(RecWindow { recent_size })
    }
}

#[derive(Clone, Copy, Debug)]
struct Exec {
    pos: usize,
    verdict: Verdict,
    duration_ms: u64,
}

#[derive(Clone, Debug, Default)]
struct TestRecord {
    execs: Vec<Exec>,
    /// Position of the first execution since the test last reappeared.
    age_start: usize,
    /// Ordinal (among builds with records) of the last execution.
    last_ordinal: usize,
    last_fail: Option<usize>,
    last_transition: Option<usize>,
    fail_builds: u32,
    transition_builds: u32,
    /// file -> builds where the test failed and the file changed
    file_fail: HashMap<String, u32>,
    /// file -> builds where the test flipped verdict and the file changed
    file_transition: HashMap<String, u32>,
}

/// Execution history of every test, fed one build at a time in history
/// order. Features for the build at position `k` must be read before that
/// build is added.
#[derive(Clone, Debug, Default)]
pub struct ExecutionIndex {
    tests: HashMap<TestId, TestRecord>,
    ordinal: usize,
    next_pos: usize,
}

impl ExecutionIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Index over the builds of `history` before position `end`.
    pub fn from_history(history: &BuildHistory, end: usize) -> Self {
        let mut index = Self::new();
        for build in &history.builds()[..end.min(history.builds().len())] {
            index.add_build(build);
        }
        index
    }

    /// Number of builds added so far; the position of the next build.
    pub fn next_position(&self) -> usize {
        self.next_pos
    }

    pub fn add_build(&mut self, build: &crate::model::Build) {
        let pos = self.next_pos;
        self.next_pos += 1;
        if build.records.is_empty() {
            return;
        }
        self.ordinal += 1;
        let changed = &build.change_set.changed_files;
        for r in &build.records {
            let rec = self.tests.entry(r.test.clone()).or_default();
            if rec.execs.is_empty() || rec.last_ordinal + 1 < self.ordinal {
                rec.age_start = pos;
            }
            rec.last_ordinal = self.ordinal;
            let failed = r.verdict.is_failed();
            let flipped = rec
                .execs
                .last()
                .is_some_and(|prev| prev.verdict.is_failed() != failed);
            if failed {
                rec.last_fail = Some(pos);
                rec.fail_builds += 1;
                for f in changed {
                    *rec.file_fail.entry(f.clone()).or_insert(0) += 1;
                }
            }
            if flipped {
                rec.last_transition = Some(pos);
                rec.transition_builds += 1;
                for f in changed {
                    *rec.file_transition.entry(f.clone()).or_insert(0) += 1;
                }
            }
            rec.execs.push(Exec {
                pos,
                verdict: r.verdict,
                duration_ms: r.duration_ms,
            });
        }
    }

    /// The 19 REC values of `test` for the build at position `k`, which
    /// changes `changed`.
    pub fn rec_features(
        &self,
        test: &TestId,
        k: usize,
        changed: &BTreeSet<String>,
        window: RecWindow,
    ) -> [f64; REC_LEN] {
        let Some(rec) = self.tests.get(test).filter(|r| !r.execs.is_empty()) else {
            let mut v = [0.0; REC_LEN];
            v[1] = -1.0;
            v[2] = -1.0;
            v[17] = -1.0;
            v[18] = -1.0;
            return v;
        };
        debug_assert!(rec.execs.last().unwrap().pos < k);
        let all = &rec.execs[..];
        let recent = &all[all.len().saturating_sub(window.recent_size)..];
        let last = all.last().unwrap();
        let age = |p: Option<usize>| p.map_or(-1.0, |p| (k - p) as f64);
        let per_file = |counts: &HashMap<String, u32>, total: u32| {
            if total == 0 {
                return -1.0;
            }
            changed
                .iter()
                .map(|f| counts.get(f).copied().unwrap_or(0))
                .max()
                .map_or(0.0, |n| n as f64 / total as f64)
        };
        [
            (k - rec.age_start) as f64,
            age(rec.last_fail),
            age(rec.last_transition),
            if last.verdict.is_failed() { 1.0 } else { 0.0 },
            last.duration_ms as f64,
            avg_time(recent),
            avg_time(all),
            max_time(recent),
            max_time(all),
            rate(recent, Verdict::is_failed),
            rate(all, Verdict::is_failed),
            rate(recent, |v| v == Verdict::AssertionFailure),
            rate(all, |v| v == Verdict::AssertionFailure),
            rate(recent, |v| v == Verdict::ExceptionFailure),
            rate(all, |v| v == Verdict::ExceptionFailure),
            transition_rate(recent),
            transition_rate(all),
            per_file(&rec.file_fail, rec.fail_builds),
            per_file(&rec.file_transition, rec.transition_builds),
        ]
    }
}

fn avg_time(execs: &[Exec]) -> f64 {
    execs.iter().map(|e| e.duration_ms as f64).sum::<f64>() / execs.len() as f64
}

fn max_time(execs: &[Exec]) -> f64 {
    execs.iter().map(|e| e.duration_ms).max().unwrap_or(0) as f64
}

fn rate(execs: &[Exec], pred: impl Fn(Verdict) -> bool) -> f64 {
    execs.iter().filter(|e| pred(e.verdict)).count() as f64 / execs.len() as f64
}

/// Pass/fail flips between consecutive executions over the number of
/// consecutive pairs.
fn transition_rate(execs: &[Exec]) -> f64 {
    if execs.len() < 2 {
        return 0.0;
    }
    let flips = execs
        .windows(2)
        .filter(|w| w[0].verdict.is_failed() != w[1].verdict.is_failed())
        .count();
    flips as f64 / (execs.len() - 1) as f64
}

/// REC values of `test` at build `k`, computed from the builds before `k`.
pub fn extract_rec_features(
    test: &TestId,
    history: &BuildHistory,
    k: BuildId,
    window: RecWindow,
) -> Result<[f64; REC_LEN]> {
    let pos = history.position(k).ok_or(Error::UnknownBuild(k.0))?;
    let index = ExecutionIndex::from_history(history, pos);
    let changed = &history.builds()[pos].change_set.changed_files;
    Ok(index.rec_features(test, pos, changed, window))
}
