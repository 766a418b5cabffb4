//! The 150-value feature vector of every (build, test) pair.
//!
//! Extraction is split in two phases. A [`Snapshot`] holds everything that
//! needs preprocessing (static analysis, dependency graph, process metrics,
//! PDF counts); [`assemble_feature_matrix`] measures a build against a
//! snapshot and the live execution history. Tests that are unknown to the
//! snapshot get the column means of the known rows for every
//! snapshot-derived group.

mod rec;
mod snapshot;

use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use rec::{extract_rec_features, ExecutionIndex, RecWindow, REC_LEN};
pub use snapshot::{PrepTiming, Preprocessor, Snapshot};

use crate::analysis::{compute_change_metrics, ChangeMetrics, ComplexityMetrics, ProcessMetrics};
use crate::catalog::{
    FeatureCatalog, FeatureGroup, CHANGE_METRICS, COMPLEXITY_METRICS, PROCESS_METRICS,
};
use crate::coverage::{cov_score, covered_files, impacted_files, normalize_scores, DependencyGraph, PdfTable};
use crate::error::Result;
use crate::model::{Build, BuildId, ChangeSet, CommitLog, FileChange, TestId};

const COM: usize = COMPLEXITY_METRICS.len();
const PRO: usize = PROCESS_METRICS.len();
const CHN: usize = CHANGE_METRICS.len();
/// Width of the TES groups together.
pub const TES_LEN: usize = COM + PRO + CHN;
/// Width of F_COV, COD_COV_* and DET_COV together.
pub const COV_LEN: usize = 4 + 2 * COM + 2 * PRO + CHN + 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub build: BuildId,
    pub test: TestId,
    pub values: Vec<f64>,
}

/// Rows in `TestId` order, one per test executed in the build.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub build: BuildId,
    pub catalog: Arc<FeatureCatalog>,
    pub rows: Vec<FeatureVector>,
}

impl FeatureMatrix {
    pub fn empty(build: BuildId) -> Self {
        FeatureMatrix {
            build,
            catalog: FeatureCatalog::standard(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.catalog.index_of(name)?;
        Ok(self.rows.iter().map(|r| r.values[i]).collect())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["build_id".to_string(), "test_path".to_string()];
        header.extend(self.catalog.names().map(str::to_owned));
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.build.to_string(), row.test.to_string()];
            rec.extend(row.values.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<dir>/features/build_<id>.csv` and returns its path.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let out = dir.join("features");
        std::fs::create_dir_all(&out)?;
        let path = out.join(format!("build_{}.csv", self.build));
        self.write_csv(std::fs::File::create(&path)?)?;
        Ok(path)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureOptions {
    pub window: RecWindow,
    pub impact_depth: usize,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        FeatureOptions {
            window: RecWindow::default(),
            impact_depth: 1,
        }
    }
}

/// Measurement time per feature group, in [`FeatureGroup::ALL`] order.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GroupTimes(pub [Duration; 9]);

impl GroupTimes {
    pub fn get(&self, group: FeatureGroup) -> Duration {
        self.0[group_slot(group)]
    }

    fn add(&mut self, group: FeatureGroup, d: Duration) {
        self.0[group_slot(group)] += d;
    }

    pub fn accumulate(&mut self, other: &GroupTimes) {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a += b;
        }
    }
}

fn group_slot(group: FeatureGroup) -> usize {
    FeatureGroup::ALL.iter().position(|g| *g == group).unwrap()
}

/// TES_COM, TES_PRO and TES_CHN values of a test file.
pub fn extract_tes_features(
    complexity: &ComplexityMetrics,
    process: &ProcessMetrics,
    change: &ChangeMetrics,
) -> Vec<f64> {
    let mut v = Vec::with_capacity(TES_LEN);
    v.extend(complexity.values());
    v.extend(process.values());
    v.extend(change.values());
    v
}

/// Per-file metrics that coverage features weight.
pub struct MetricStore<'a> {
    pub complexity: &'a HashMap<String, ComplexityMetrics>,
    pub process: &'a HashMap<String, ProcessMetrics>,
    pub change: &'a HashMap<String, ChangeMetrics>,
}

fn weighted(files: &[&String], weights: &[f64], metric: impl Fn(&str) -> Vec<f64>, width: usize) -> Vec<f64> {
    let mut sum = vec![0.0; width];
    for (f, w) in files.iter().zip(weights) {
        if *w == 0.0 {
            continue;
        }
        for (s, m) in sum.iter_mut().zip(metric(f)) {
            *s += w * m;
        }
    }
    sum
}

/// F_COV, COD_COV_COM, COD_COV_PRO, COD_COV_CHN and DET_COV values of a test,
/// in catalog order. The change set must carry imp(b).
pub fn extract_cov_features(
    test: &TestId,
    graph: &DependencyGraph,
    change_set: &ChangeSet,
    pdf: &PdfTable,
    store: &MetricStore,
) -> Result<Vec<f64>> {
    cov_features(test, graph, change_set, pdf, store, &mut GroupTimes::default())
}

fn cov_features(
    test: &TestId,
    graph: &DependencyGraph,
    change_set: &ChangeSet,
    pdf: &PdfTable,
    store: &MetricStore,
    times: &mut GroupTimes,
) -> Result<Vec<f64>> {
    let t = Instant::now();
    let covered = covered_files(graph, test)?;
    let c_files: Vec<&String> = covered.intersection(&change_set.changed_files).collect();
    let i_files: Vec<&String> = covered.intersection(&change_set.impacted_files).collect();
    let weights = |files: &[&String]| {
        let raw: Vec<f64> = files.iter().map(|f| cov_score(graph, f, test)).collect();
        normalize_scores(&raw)
    };
    let wc = weights(&c_files);
    let wi = weights(&i_files);
    let mut v = Vec::with_capacity(COV_LEN);
    v.push(wc.iter().fold(0.0, |a, b| a + b));
    v.push(wi.iter().fold(0.0, |a, b| a + b));
    v.push(c_files.len() as f64);
    v.push(i_files.len() as f64);
    times.add(FeatureGroup::F_COV, t.elapsed());

    let t = Instant::now();
    let com = |f: &str| store.complexity.get(f).map_or(vec![0.0; COM], |m| m.values().to_vec());
    v.extend(weighted(&c_files, &wc, com, COM));
    v.extend(weighted(&i_files, &wi, com, COM));
    times.add(FeatureGroup::COD_COV_COM, t.elapsed());

    let t = Instant::now();
    let pro = |f: &str| store.process.get(f).map_or(vec![0.0; PRO], |m| m.values().to_vec());
    v.extend(weighted(&c_files, &wc, pro, PRO));
    v.extend(weighted(&i_files, &wi, pro, PRO));
    times.add(FeatureGroup::COD_COV_PRO, t.elapsed());

    let t = Instant::now();
    let chn = |f: &str| {
        store
            .change
            .get(f)
            .cloned()
            .unwrap_or_default()
            .values()
            .to_vec()
    };
    v.extend(weighted(&c_files, &wc, chn, CHN));
    times.add(FeatureGroup::COD_COV_CHN, t.elapsed());

    let t = Instant::now();
    let faults = |f: &str| vec![pdf.get(f).copied().unwrap_or(0) as f64];
    v.extend(weighted(&c_files, &wc, faults, 1));
    v.extend(weighted(&i_files, &wi, faults, 1));
    times.add(FeatureGroup::DET_COV, t.elapsed());
    Ok(v)
}

/// Everything a build is measured against.
pub struct MeasureInputs<'a> {
    pub build: &'a Build,
    /// Position of the build in its history.
    pub position: usize,
    /// Execution history of the builds before `position` only.
    pub executions: &'a ExecutionIndex,
    pub snapshot: &'a Snapshot,
    pub commits: &'a CommitLog,
}

/// File changes made by the commits a build lists.
pub fn build_file_changes(build: &Build, commits: &CommitLog) -> Vec<FileChange> {
    build
        .change_set
        .commits
        .iter()
        .filter_map(|c| commits.get(c))
        .flat_map(|c| c.file_changes.iter().cloned())
        .collect()
}

/// Builds the feature matrix of one build. Never reads the build's own
/// verdicts or durations.
pub fn assemble_feature_matrix(inputs: &MeasureInputs, options: &FeatureOptions) -> (FeatureMatrix, GroupTimes) {
    let catalog = FeatureCatalog::standard();
    let mut times = GroupTimes::default();
    let build = inputs.build;
    let snap = inputs.snapshot;

    let t = Instant::now();
    let changes = build_file_changes(build, inputs.commits);
    let mut change_set = build.change_set.clone();
    change_set.set_impacted(impacted_files(&snap.graph, &change_set.changed_files, options.impact_depth));
    let change: HashMap<String, ChangeMetrics> = change_set
        .changed_files
        .iter()
        .map(|f| (f.clone(), compute_change_metrics(f, &changes)))
        .collect();
    times.add(FeatureGroup::TES_CHN, t.elapsed());

    let store = MetricStore {
        complexity: &snap.metrics,
        process: &snap.process,
        change: &change,
    };
    let snapshot_cols: Vec<usize> = FeatureGroup::ALL
        .iter()
        .filter(|g| g.is_snapshot_derived())
        .flat_map(|g| catalog.indices_of_group(*g))
        .collect();

    let mut rows = Vec::new();
    let mut unknown = Vec::new();
    for test in build.tests() {
        let mut values = Vec::with_capacity(catalog.len());
        let t = Instant::now();
        values.extend(inputs.executions.rec_features(
            &test,
            inputs.position,
            &change_set.changed_files,
            options.window,
        ));
        times.add(FeatureGroup::REC, t.elapsed());

        let known = snap.metrics.contains_key(test.as_str());
        let t = Instant::now();
        values.extend(
            snap.metrics
                .get(test.as_str())
                .cloned()
                .unwrap_or_default()
                .values(),
        );
        times.add(FeatureGroup::TES_COM, t.elapsed());
        let t = Instant::now();
        values.extend(
            snap.process
                .get(test.as_str())
                .cloned()
                .unwrap_or_default()
                .values(),
        );
        times.add(FeatureGroup::TES_PRO, t.elapsed());
        let t = Instant::now();
        values.extend(change.get(test.as_str()).cloned().unwrap_or_default().values());
        times.add(FeatureGroup::TES_CHN, t.elapsed());

        match cov_features(&test, &snap.graph, &change_set, &snap.pdf, &store, &mut times) {
            Ok(cov) => values.extend(cov),
            Err(_) => values.extend(std::iter::repeat(0.0).take(COV_LEN)),
        }
        debug_assert_eq!(values.len(), catalog.len());
        if !known {
            unknown.push(rows.len());
        }
        rows.push(FeatureVector {
            build: build.id,
            test,
            values,
        });
    }

    if !unknown.is_empty() {
        let t = Instant::now();
        impute_column_means(&mut rows, &unknown, &snapshot_cols);
        // imputation cost is shared by every snapshot-derived group
        for g in FeatureGroup::ALL.iter().filter(|g| g.is_snapshot_derived()) {
            times.add(*g, t.elapsed());
        }
    }

    (
        FeatureMatrix {
            build: build.id,
            catalog,
            rows,
        },
        times,
    )
}

/// Replaces `cols` of the `unknown` rows by the mean over the other rows, or
/// 0 when every row is unknown.
pub fn impute_column_means(rows: &mut [FeatureVector], unknown: &[usize], cols: &[usize]) {
    let skip: BTreeSet<usize> = unknown.iter().copied().collect();
    let known = rows.len() - skip.len();
    for &c in cols {
        let mean = if known == 0 {
            0.0
        } else {
            rows.iter()
                .enumerate()
                .filter(|(i, _)| !skip.contains(i))
                .map(|(_, r)| r.values[c])
                .sum::<f64>()
                / known as f64
        };
        for &i in unknown {
            rows[i].values[c] = mean;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{EntityKind, SourceEntity};
    use crate::coverage::build_dependency_graph;
    use crate::model::{Commit, CommitId};

    fn entity(path: &str, kind: EntityKind, imports: &[&str]) -> SourceEntity {
        SourceEntity {
            path: path.into(),
            kind,
            import_targets: imports.iter().map(|s| s.to_string()).collect(),
            call_targets: BTreeSet::new(),
        }
    }

    fn commit(i: usize, files: &[&str]) -> Commit {
        Commit {
            id: CommitId(i.to_string()),
            timestamp: 0,
            author: "a".into(),
            message: String::new(),
            file_changes: files
                .iter()
                .map(|f| FileChange { path: f.to_string(), ..Default::default() })
                .collect(),
        }
    }

    /// T depends on f1 and f2 with confidences 0.2 and 0.6.
    fn fixture() -> (DependencyGraph, TestId) {
        let entities = vec![
            entity("T.java", EntityKind::TestFile, &["f1.java", "f2.java"]),
            entity("f1.java", EntityKind::SutFile, &[]),
            entity("f2.java", EntityKind::SutFile, &[]),
        ];
        let mut history = Vec::new();
        // f1: 5 commits, 1 with T; f2: 5 commits, 3 with T
        history.push(commit(0, &["f1.java", "T.java"]));
        for i in 1..5 {
            history.push(commit(i, &["f1.java"]));
        }
        for i in 5..8 {
            history.push(commit(i, &["f2.java", "T.java"]));
        }
        for i in 8..10 {
            history.push(commit(i, &["f2.java"]));
        }
        (build_dependency_graph(&entities, &history, None), TestId::new("T.java").unwrap())
    }

    fn store_with_loc(loc: &[(&str, u32)]) -> HashMap<String, ComplexityMetrics> {
        loc.iter()
            .map(|&(f, n)| (f.to_string(), ComplexityMetrics { count_line_code: n, ..Default::default() }))
            .collect()
    }

    #[test]
    fn normalized_weighted_sums() {
        let (graph, t) = fixture();
        assert!((cov_score(&graph, "f1.java", &t) - 0.2).abs() < 1e-12);
        assert!((cov_score(&graph, "f2.java", &t) - 0.6).abs() < 1e-12);
        let complexity = store_with_loc(&[("f1.java", 100), ("f2.java", 50)]);
        let process = HashMap::new();
        let change = HashMap::new();
        let store = MetricStore { complexity: &complexity, process: &process, change: &change };
        let mut cs = ChangeSet::default();
        cs.changed_files = ["f1.java", "f2.java"].iter().map(|s| s.to_string()).collect();
        let pdf: PdfTable = [("f1.java".to_string(), 4)].into_iter().collect();
        let v = extract_cov_features(&t, &graph, &cs, &pdf, &store).unwrap();
        let catalog = FeatureCatalog::standard();
        let offset = catalog.index_of("F_SumCovCScore").unwrap();
        let get = |name: &str| v[catalog.index_of(name).unwrap() - offset];
        assert!((get("F_SumCovCScore") - 1.0).abs() < 1e-12);
        assert_eq!(get("F_CovCCount"), 2.0);
        assert_eq!(get("F_CovICount"), 0.0);
        assert!((get("F_WSumC_CountLineCode") - 62.5).abs() < 1e-9);
        assert!((get("F_WSumCovCFaults") - 1.0).abs() < 1e-12);
        assert_eq!(v.len(), COV_LEN);
    }

    #[test]
    fn nothing_changed_gives_zeros() {
        let (graph, t) = fixture();
        let empty = HashMap::new();
        let (p, c) = (HashMap::new(), HashMap::new());
        let store = MetricStore { complexity: &empty, process: &p, change: &c };
        let v = extract_cov_features(&t, &graph, &ChangeSet::default(), &PdfTable::new(), &store).unwrap();
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn imputation_uses_known_rows() {
        let row = |v: f64| FeatureVector { build: BuildId(1), test: TestId::new("x").unwrap(), values: vec![v, v] };
        let mut rows = vec![row(1.0), row(3.0), row(100.0)];
        impute_column_means(&mut rows, &[2], &[1]);
        assert_eq!(rows[2].values, vec![100.0, 2.0]);
        let mut rows = vec![row(5.0)];
        impute_column_means(&mut rows, &[0], &[0, 1]);
        assert_eq!(rows[0].values, vec![0.0, 0.0]);
    }

    #[test]
    fn tes_features_copy_metrics() {
        let m = ComplexityMetrics { count_line: 9, ..Default::default() };
        let v = extract_tes_features(&m, &ProcessMetrics::default(), &ChangeMetrics::default());
        assert_eq!(v.len(), TES_LEN);
        assert_eq!(v[1], 9.0);
        assert_eq!(&v[TES_LEN - 3..], &[-1.0, -1.0, -1.0]);
    }
}
