use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{Build, TestId};
use crate::ranker::{RankedTest, TestOrdering};

/// Cost-cognizant APFD of an ordering given per-position durations and
/// failure flags. Every failing position is one distinct fault. Returns
/// `None` when nothing fails. If all durations are zero, unit costs are used.
pub fn apfdc_values(durations: &[f64], failed: &[bool]) -> Option<f64> {
    assert_eq!(durations.len(), failed.len());
    let m = failed.iter().filter(|&&f| f).count();
    if m == 0 {
        return None;
    }
    let total: f64 = durations.iter().sum();
    let unit;
    let t: &[f64] = if total > 0.0 {
        durations
    } else {
        unit = vec![1.0; durations.len()];
        &unit
    };
    let total: f64 = t.iter().sum();
    // suffix[i] = sum of t[i..]
    let mut suffix = vec![0.0; t.len() + 1];
    for i in (0..t.len()).rev() {
        suffix[i] = suffix[i + 1] + t[i];
    }
    let numerator: f64 = failed
        .iter()
        .enumerate()
        .filter(|(_, &f)| f)
        .map(|(i, _)| suffix[i] - t[i] / 2.0)
        .sum();
    Some(numerator / (total * m as f64))
}

/// APFD_C of `order` against the verdicts and durations recorded in `build`.
pub fn apfdc(order: &[TestId], build: &Build) -> Result<f64> {
    let records: BTreeMap<&TestId, _> = build.records.iter().map(|r| (&r.test, r)).collect();
    let mut seen = BTreeSet::new();
    let mut durations = Vec::with_capacity(order.len());
    let mut failed = Vec::with_capacity(order.len());
    for test in order {
        let record = records
            .get(test)
            .ok_or_else(|| Error::UnknownTest(test.to_string()))?;
        if !seen.insert(test) {
            return Err(Error::Invariant(format!("{test} appears twice in ordering")));
        }
        durations.push(record.duration_ms as f64);
        failed.push(record.verdict.is_failed());
    }
    if seen.len() != records.len() {
        return Err(Error::Invariant(format!(
            "ordering covers {} of {} tests in build {}",
            seen.len(),
            records.len(),
            build.id
        )));
    }
    apfdc_values(&durations, &failed).ok_or(Error::NoFailures)
}

/// Failed tests first, each tier by ascending duration, then test path.
pub fn optimal_ordering(build: &Build) -> TestOrdering {
    let mut records: Vec<_> = build.records.iter().collect();
    records.sort_by(|a, b| {
        b.verdict
            .is_failed()
            .cmp(&a.verdict.is_failed())
            .then(a.duration_ms.cmp(&b.duration_ms))
            .then_with(|| a.test.cmp(&b.test))
    });
    let n = records.len();
    TestOrdering {
        build: build.id,
        ranked: records
            .into_iter()
            .enumerate()
            .map(|(i, r)| RankedTest {
                test: r.test.clone(),
                score: (n - i) as f64,
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BuildId, ExecutionRecord, Verdict};

    fn build(spec: &[(&str, bool, u64)]) -> Build {
        let mut b = Build::new(BuildId(1), vec![]);
        for &(name, fail, d) in spec {
            b.records.push(ExecutionRecord {
                build: BuildId(1),
                test: TestId::new(name).unwrap(),
                verdict: if fail {
                    Verdict::AssertionFailure
                } else {
                    Verdict::Passed
                },
                duration_ms: d,
            });
        }
        b
    }

    fn ids(names: &[&str]) -> Vec<TestId> {
        names.iter().map(|n| TestId::new(*n).unwrap()).collect()
    }

    #[test]
    fn single_failing_test_is_one_half() {
        for t in [1, 7, 1000] {
            let b = build(&[("A", true, t)]);
            assert_eq!(apfdc(&ids(&["A"]), &b).unwrap(), 0.5);
        }
    }

    #[test]
    fn two_tests_first_fails() {
        let b = build(&[("A", true, 120_000), ("B", false, 60_000)]);
        let v = apfdc(&ids(&["A", "B"]), &b).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn optimal_example() {
        let b = build(&[("A", true, 5000), ("B", false, 1000), ("C", true, 2000)]);
        assert_eq!(optimal_ordering(&b).tests(), ids(&["C", "A", "B"]));
        let passing = build(&[("A", false, 3), ("B", false, 1), ("C", false, 2)]);
        assert_eq!(optimal_ordering(&passing).tests(), ids(&["B", "C", "A"]));
    }

    #[test]
    fn no_failures_is_undefined() {
        let b = build(&[("A", false, 3)]);
        assert!(matches!(apfdc(&ids(&["A"]), &b), Err(Error::NoFailures)));
    }

    #[test]
    fn incomplete_ordering_rejected() {
        let b = build(&[("A", true, 3), ("B", false, 1)]);
        assert!(apfdc(&ids(&["A"]), &b).is_err());
        assert!(apfdc(&ids(&["A", "Z"]), &b).is_err());
    }

    #[test]
    fn zero_durations_use_unit_costs() {
        assert_eq!(apfdc_values(&[0.0, 0.0], &[true, false]), apfdc_values(&[1.0, 1.0], &[true, false]));
    }
}
