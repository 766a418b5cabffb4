use std::collections::{BTreeMap, BTreeSet};

use crate::model::{BuildHistory, TestId};

/// Failure counts per test over all executed tests (zero for never-failed).
pub fn failure_counts(history: &BuildHistory) -> BTreeMap<TestId, u64> {
    let mut counts = BTreeMap::new();
    for build in history.builds() {
        for record in &build.records {
            *counts.entry(record.test.clone()).or_insert(0) +=
                u64::from(record.verdict.is_failed());
        }
    }
    counts
}

/// mean + 3 * sample standard deviation of the counts, or `None` with fewer
/// than two tests.
pub fn three_sigma_threshold(counts: &[u64]) -> Option<f64> {
    if counts.len() < 2 {
        return None;
    }
    let n = counts.len() as f64;
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    let var = counts
        .iter()
        .map(|&c| (c as f64 - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    Some(mean + 3.0 * var.sqrt())
}

/// Drops every test whose failure count exceeds the three-sigma threshold, in
/// a single pass. Builds whose only failures came from removed tests become
/// passing builds.
pub fn remove_frequent_failers(history: &BuildHistory) -> (BuildHistory, Vec<TestId>) {
    let counts = failure_counts(history);
    let values: Vec<u64> = counts.values().copied().collect();
    let Some(threshold) = three_sigma_threshold(&values) else {
        return (history.clone(), Vec::new());
    };
    let removed: BTreeSet<TestId> = counts
        .into_iter()
        .filter(|&(_, c)| c as f64 > threshold)
        .map(|(t, _)| t)
        .collect();
    let mut filtered = history.clone();
    for build in filtered.builds_mut() {
        build.records.retain(|r| !removed.contains(&r.test));
    }
    (filtered, removed.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Build, BuildId, ExecutionRecord, Verdict};

    #[test]
    fn threshold_of_skewed_counts() {
        let mut counts = vec![1u64; 49];
        counts.push(50);
        let t = three_sigma_threshold(&counts).unwrap();
        // mean 1.98, sample sd 6.93
        assert!((t - 22.77).abs() < 0.01, "{t}");
    }

    #[test]
    fn removal_reflags_builds() {
        let rec = |b: u64, t: &str, fail: bool| ExecutionRecord {
            build: BuildId(b),
            test: TestId::new(t).unwrap(),
            verdict: if fail {
                Verdict::ExceptionFailure
            } else {
                Verdict::Passed
            },
            duration_ms: 1,
        };
        let mut builds = Vec::new();
        for b in 1..=30u64 {
            let mut build = Build::new(BuildId(b), vec![]);
            build.records.push(rec(b, "flaky", true));
            for t in 0..20 {
                build.records.push(rec(b, &format!("t{t}"), b == 1 && t == 0));
            }
            builds.push(build);
        }
        let history = BuildHistory::new(builds).unwrap();
        assert_eq!(history.failed_builds().count(), 30);
        let (filtered, removed) = remove_frequent_failers(&history);
        assert_eq!(removed, vec![TestId::new("flaky").unwrap()]);
        assert_eq!(filtered.failed_builds().count(), 1);
    }
}
