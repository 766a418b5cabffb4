use serde::{Deserialize, Serialize};

use super::java::UnitInfo;
use crate::catalog::CHANGE_METRICS;
use crate::model::{FileChange, RiskDelta, UnitRisk};

/// Value of a DMM metric when no unit risk data is available.
pub const DMM_UNDEFINED: f64 = -1.0;

const SIZE_THRESHOLD: u32 = 15;
const COMPLEXITY_THRESHOLD: u32 = 5;
const INTERFACING_THRESHOLD: u32 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangeMetrics {
    pub lines_added: u32,
    pub lines_deleted: u32,
    pub added_change_scattering: f64,
    pub deleted_change_scattering: f64,
    pub dmm_unit_size: f64,
    pub dmm_unit_complexity: f64,
    pub dmm_unit_interfacing: f64,
}

impl Default for ChangeMetrics {
    /// Metrics of an unchanged file.
    fn default() -> Self {
        ChangeMetrics {
            lines_added: 0,
            lines_deleted: 0,
            added_change_scattering: 0.0,
            deleted_change_scattering: 0.0,
            dmm_unit_size: DMM_UNDEFINED,
            dmm_unit_complexity: DMM_UNDEFINED,
            dmm_unit_interfacing: DMM_UNDEFINED,
        }
    }
}

impl ChangeMetrics {
    pub fn values(&self) -> [f64; CHANGE_METRICS.len()] {
        [
            self.lines_added as f64,
            self.lines_deleted as f64,
            self.added_change_scattering,
            self.deleted_change_scattering,
            self.dmm_unit_size,
            self.dmm_unit_complexity,
            self.dmm_unit_interfacing,
        ]
    }
}

/// `|CH| / C(|CH|, 2) * sum of |line_i - line_j|` over unordered pairs; 0 for
/// fewer than two chunks.
pub fn change_scattering(chunk_lines: &[u32]) -> f64 {
    let n = chunk_lines.len();
    if n < 2 {
        return 0.0;
    }
    let mut sorted: Vec<i64> = chunk_lines.iter().map(|&l| l as i64).collect();
    sorted.sort_unstable();
    // sum of pairwise distances of sorted values: each x_i contributes
    // x_i * (2i - n + 1)
    let dist: i64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| x * (2 * i as i64 - n as i64 + 1))
        .sum();
    let pairs = (n * (n - 1) / 2) as f64;
    n as f64 / pairs * dist as f64
}

fn dmm(deltas: impl Iterator<Item = RiskDelta>) -> f64 {
    let (good, bad) = deltas.fold((0u64, 0u64), |(g, b), d| {
        let (dg, db) = d.good_bad();
        (g + dg, b + db)
    });
    if good + bad == 0 {
        DMM_UNDEFINED
    } else {
        good as f64 / (good + bad) as f64
    }
}

/// Change metrics of one file over the changes a build's commits made to it.
/// Chunk start lines of all commits are pooled.
pub fn compute_change_metrics(path: &str, changes: &[FileChange]) -> ChangeMetrics {
    let mine: Vec<&FileChange> = changes.iter().filter(|c| c.path == path).collect();
    let added: Vec<u32> = mine.iter().flat_map(|c| c.added_chunks.iter().copied()).collect();
    let deleted: Vec<u32> = mine.iter().flat_map(|c| c.deleted_chunks.iter().copied()).collect();
    let risks: Vec<UnitRisk> = mine.iter().filter_map(|c| c.risk).collect();
    ChangeMetrics {
        lines_added: mine.iter().map(|c| c.lines_added).sum(),
        lines_deleted: mine.iter().map(|c| c.lines_deleted).sum(),
        added_change_scattering: change_scattering(&added),
        deleted_change_scattering: change_scattering(&deleted),
        dmm_unit_size: dmm(risks.iter().map(|r| r.size)),
        dmm_unit_complexity: dmm(risks.iter().map(|r| r.complexity)),
        dmm_unit_interfacing: dmm(risks.iter().map(|r| r.interfacing)),
    }
}

fn profile(units: &[UnitInfo], low_risk: impl Fn(&UnitInfo) -> bool) -> (i64, i64) {
    units.iter().fold((0, 0), |(lo, hi), u| {
        if low_risk(u) {
            (lo + u.nloc as i64, hi)
        } else {
            (lo, hi + u.nloc as i64)
        }
    })
}

/// Delta of the low/high-risk line profile between a file's units before and
/// after a change, for each DMM property.
pub fn risk_delta(before: &[UnitInfo], after: &[UnitInfo]) -> UnitRisk {
    let delta = |f: &dyn Fn(&UnitInfo) -> bool| {
        let (lb, hb) = profile(before, f);
        let (la, ha) = profile(after, f);
        RiskDelta { low: la - lb, high: ha - hb }
    };
    UnitRisk {
        size: delta(&|u| u.nloc <= SIZE_THRESHOLD),
        complexity: delta(&|u| u.cyclomatic <= COMPLEXITY_THRESHOLD),
        interfacing: delta(&|u| u.parameters <= INTERFACING_THRESHOLD),
    }
}
