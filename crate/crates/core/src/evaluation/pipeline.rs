use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::apfdc::{apfdc, optimal_ordering};
use super::decay::{DecayCurve, DecayPair};
use super::outliers::remove_frequent_failers;
use super::timing::{PrepCost, TimingReport};
use crate::analysis::AnalyzerTable;
use crate::classifier::MessageClassifier;
use crate::error::{Error, Result};
use crate::features::{
    assemble_feature_matrix, ExecutionIndex, FeatureMatrix, FeatureOptions, GroupTimes, MeasureInputs,
    Preprocessor, Snapshot,
};
use crate::ingest::SourceStore;
use crate::model::{Build, BuildHistory, BuildId, CommitLog, TestId};
use crate::ranker::{heuristic_rank, HeuristicSpec, Hyperparams, LabeledMatrix, RankingModel};

/// Data a pipeline run reads.
pub struct EvalInputs<'a> {
    pub history: &'a BuildHistory,
    pub commits: &'a CommitLog,
    pub source: &'a dyn SourceStore,
    pub classifier: &'a dyn MessageClassifier,
    pub analyzers: AnalyzerTable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    pub features: FeatureOptions,
    pub hyperparams: Hyperparams,
    /// Only the latest this many failed builds are evaluated.
    pub max_eval_builds: usize,
    pub heuristic: HeuristicSpec,
    pub remove_frequent_failers: bool,
    /// Largest retraining window of the decay experiment.
    pub max_rw: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            features: FeatureOptions::default(),
            hyperparams: Hyperparams::default(),
            max_eval_builds: 50,
            heuristic: HeuristicSpec::default(),
            remove_frequent_failers: true,
            max_rw: 11,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// The ensemble trained on all features of prior failed builds.
    Full,
    Heuristic,
    /// Expected APFD_C of a uniformly random ordering.
    Random,
    Optimal,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Full, Strategy::Heuristic, Strategy::Random, Strategy::Optimal];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Full => "full",
            Strategy::Heuristic => "heuristic",
            Strategy::Random => "random",
            Strategy::Optimal => "optimal",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildResult {
    pub build: BuildId,
    pub strategy: Strategy,
    pub apfdc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: Strategy,
    pub builds: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single build.
    pub sd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub options: EvalOptions,
    pub removed_tests: Vec<TestId>,
    pub evaluated_builds: Vec<BuildId>,
    pub results: Vec<BuildResult>,
    pub summary: Vec<StrategySummary>,
    pub timing: TimingReport,
    /// Split counts of the model of the last evaluated build.
    pub feature_usage: Vec<(String, u64)>,
}

impl EvaluationReport {
    pub fn summary(&self, strategy: Strategy) -> Option<&StrategySummary> {
        self.summary.iter().find(|s| s.strategy == strategy)
    }

    pub fn mean(&self, strategy: Strategy) -> Option<f64> {
        self.summary(strategy).map(|s| s.mean)
    }

    pub fn values(&self, strategy: Strategy) -> Vec<(BuildId, f64)> {
        self.results
            .iter()
            .filter(|r| r.strategy == strategy)
            .map(|r| (r.build, r.apfdc))
            .collect()
    }

    /// `build_id,strategy,apfdc` rows.
    pub fn write_apfdc_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["build_id", "strategy", "apfdc"])?;
        for r in &self.results {
            w.write_record([r.build.to_string(), r.strategy.as_str().to_string(), r.apfdc.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `apfdc.csv`, `timing.csv` and `report.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_apfdc_csv(std::fs::File::create(dir.join("apfdc.csv"))?)?;
        self.timing.write_csv(std::fs::File::create(dir.join("timing.csv"))?)?;
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Expected APFD_C over all orderings of `build`, in closed form: a failing
/// test of cost t_f is preceded on average by half of the remaining cost.
pub fn expected_random_apfdc(build: &Build) -> Result<f64> {
    let costs: Vec<f64> = build.records.iter().map(|r| r.duration_ms as f64).collect();
    let total: f64 = costs.iter().sum();
    let unit = total <= 0.0;
    let total = if unit { costs.len() as f64 } else { total };
    let mut numerator = 0.0;
    let mut faults = 0usize;
    for (r, &c) in build.records.iter().zip(&costs) {
        if r.verdict.is_failed() {
            let t = if unit { 1.0 } else { c };
            numerator += (total - t) / 2.0 + t / 2.0;
            faults += 1;
        }
    }
    if faults == 0 {
        return Err(Error::NoFailures);
    }
    Ok(numerator / (total * faults as f64))
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (mean, sd)
}

struct Walk {
    /// History after frequent-failer removal.
    history: BuildHistory,
    removed: Vec<TestId>,
    /// Positions of the failed builds with at least one record.
    failed: Vec<usize>,
    /// Index into `failed` of the first evaluated build.
    first_eval: usize,
    standard: Vec<LabeledMatrix>,
    /// (model build, measured build) in failed-build indices, measured
    /// against the snapshot of the model build.
    stale: Vec<(usize, usize, FeatureMatrix)>,
    prep: PrepCost,
    measure: GroupTimes,
}

/// Walks the history once, measuring every failed build against its own
/// snapshot and, if `max_rw` is set, against the frozen snapshots of up to
/// `max_rw` earlier evaluated builds.
fn walk(inputs: &EvalInputs, options: &EvalOptions, max_rw: Option<usize>) -> Result<Walk> {
    options.hyperparams.validate()?;
    if options.max_eval_builds == 0 {
        return Err(Error::InvalidConfig("max_eval_builds must be positive".into()));
    }
    let (history, removed) = if options.remove_frequent_failers {
        remove_frequent_failers(inputs.history)
    } else {
        (inputs.history.clone(), Vec::new())
    };
    let failed: Vec<usize> = history
        .builds()
        .iter()
        .enumerate()
        .filter(|(_, b)| !b.records.is_empty() && b.is_failed())
        .map(|(i, _)| i)
        .collect();
    if failed.len() < 2 {
        return Err(Error::InsufficientHistory(format!(
            "{} failed build(s); at least 2 are needed",
            failed.len()
        )));
    }
    let first_eval = failed.len().saturating_sub(options.max_eval_builds).max(1);
    let slot: BTreeMap<usize, usize> = failed.iter().enumerate().map(|(f, &p)| (p, f)).collect();

    let mut pre = Preprocessor::new(inputs.commits, inputs.source, inputs.classifier, inputs.analyzers.clone());
    let mut executions = ExecutionIndex::new();
    let mut frozen: BTreeMap<usize, Snapshot> = BTreeMap::new();
    let mut standard = Vec::with_capacity(failed.len());
    let mut stale = Vec::new();
    let mut prep = PrepCost::default();
    let mut measure = GroupTimes::default();
    let mut pending_exec = Duration::ZERO;

    for (pos, build) in history.builds().iter().enumerate() {
        if let Some(&f) = slot.get(&pos) {
            let snapshot = pre.snapshot(build)?;
            prep.accumulate(&PrepCost {
                steps: snapshot.timing,
                executions: std::mem::take(&mut pending_exec),
            });
            let measured = |snap: &Snapshot| {
                assemble_feature_matrix(
                    &MeasureInputs {
                        build,
                        position: pos,
                        executions: &executions,
                        snapshot: snap,
                        commits: inputs.commits,
                    },
                    &options.features,
                )
            };
            let (matrix, times) = measured(&snapshot);
            measure.accumulate(&times);
            standard.push(LabeledMatrix::from_failures(matrix, &build.failed_tests()));
            if let Some(max_rw) = max_rw {
                frozen.retain(|&k, _| f - k <= max_rw);
                for (&k, snap) in &frozen {
                    stale.push((k, f, measured(snap).0));
                }
                if f >= first_eval && max_rw > 0 {
                    frozen.insert(f, snapshot);
                }
            }
        }
        let t = Instant::now();
        executions.add_build(build);
        pending_exec += t.elapsed();
    }

    Ok(Walk {
        history,
        removed,
        failed,
        first_eval,
        standard,
        stale,
        prep,
        measure,
    })
}

impl Walk {
    fn build(&self, f: usize) -> &Build {
        &self.history.builds()[self.failed[f]]
    }

    fn train(&self, f: usize, hp: &Hyperparams) -> Result<RankingModel> {
        let catalog = &self.standard[f].matrix.catalog;
        RankingModel::train(&self.standard[..f], catalog, hp, self.build(f).id)
    }
}

/// Feature matrices of the builds at `positions` (history indices), each
/// measured against its own snapshot.
pub fn measure_builds(
    inputs: &EvalInputs,
    features: &FeatureOptions,
    positions: &BTreeSet<usize>,
) -> Result<BTreeMap<usize, FeatureMatrix>> {
    let Some(&last) = positions.last() else {
        return Ok(BTreeMap::new());
    };
    let mut pre = Preprocessor::new(inputs.commits, inputs.source, inputs.classifier, inputs.analyzers.clone());
    let mut executions = ExecutionIndex::new();
    let mut out = BTreeMap::new();
    for (pos, build) in inputs.history.builds().iter().enumerate().take(last + 1) {
        if positions.contains(&pos) {
            let snapshot = pre.snapshot(build)?;
            let inputs = MeasureInputs {
                build,
                position: pos,
                executions: &executions,
                snapshot: &snapshot,
                commits: inputs.commits,
            };
            out.insert(pos, assemble_feature_matrix(&inputs, features).0);
        }
        executions.add_build(build);
    }
    Ok(out)
}

/// Trains on every failed build before `until`.
pub fn train_until(inputs: &EvalInputs, options: &EvalOptions, until: BuildId) -> Result<RankingModel> {
    options.hyperparams.validate()?;
    let end = inputs.history.position(until).ok_or(Error::UnknownBuild(until.0))?;
    let prefix = BuildHistory::new(inputs.history.builds()[..end].to_vec())?;
    let history = if options.remove_frequent_failers {
        remove_frequent_failers(&prefix).0
    } else {
        prefix
    };
    let positions: BTreeSet<usize> = history
        .builds()
        .iter()
        .enumerate()
        .filter(|(_, b)| !b.records.is_empty() && b.is_failed())
        .map(|(i, _)| i)
        .collect();
    if positions.is_empty() {
        return Err(Error::NoFailedBuilds);
    }
    let scoped = EvalInputs {
        history: &history,
        analyzers: inputs.analyzers.clone(),
        ..*inputs
    };
    let examples: Vec<LabeledMatrix> = measure_builds(&scoped, &options.features, &positions)?
        .into_iter()
        .map(|(pos, m)| LabeledMatrix::from_failures(m, &history.builds()[pos].failed_tests()))
        .collect();
    let catalog = examples[0].matrix.catalog.clone();
    RankingModel::train(&examples, &catalog, &options.hyperparams, until)
}

/// Trains a model per evaluated failed build on all earlier failed builds and
/// records APFD_C of the full model, the heuristic, the random expectation
/// and the optimal ordering.
pub fn run_pipeline_eval(inputs: &EvalInputs, options: &EvalOptions) -> Result<EvaluationReport> {
    let walk = walk(inputs, options, None)?;
    let mut results = Vec::new();
    let mut evaluated = Vec::new();
    let mut feature_usage = Vec::new();
    for f in walk.first_eval..walk.failed.len() {
        let build = walk.build(f);
        let matrix = &walk.standard[f].matrix;
        let model = walk.train(f, &options.hyperparams)?;
        let full = apfdc(&model.predict(matrix)?.tests(), build)?;
        let heur = heuristic_rank(matrix, &options.heuristic.feature, options.heuristic.direction)?;
        let heur = apfdc(&heur.tests(), build)?;
        let random = expected_random_apfdc(build)?;
        let optimal = apfdc(&optimal_ordering(build).tests(), build)?;
        for (strategy, apfdc) in Strategy::ALL.into_iter().zip([full, heur, random, optimal]) {
            results.push(BuildResult {
                build: build.id,
                strategy,
                apfdc,
            });
        }
        evaluated.push(build.id);
        feature_usage = model.feature_usage();
    }
    let summary = Strategy::ALL
        .into_iter()
        .map(|strategy| {
            let values: Vec<f64> = results.iter().filter(|r| r.strategy == strategy).map(|r| r.apfdc).collect();
            let (mean, sd) = mean_sd(&values);
            StrategySummary {
                strategy,
                builds: values.len(),
                mean,
                sd,
            }
        })
        .collect();
    feature_usage.retain(|(_, c)| *c > 0);
    Ok(EvaluationReport {
        options: options.clone(),
        removed_tests: walk.removed.clone(),
        evaluated_builds: evaluated,
        results,
        summary,
        timing: TimingReport::from_totals(&walk.prep, &walk.measure, walk.standard.len()),
        feature_usage,
    })
}

/// Tests each evaluated build's model on the failed builds up to
/// `options.max_rw` failed builds later, measured against the model build's
/// frozen snapshot. RW = 0 is the standard evaluation.
pub fn decay_experiment(inputs: &EvalInputs, options: &EvalOptions) -> Result<DecayCurve> {
    let walk = walk(inputs, options, Some(options.max_rw))?;
    let mut stale: BTreeMap<usize, Vec<(usize, &FeatureMatrix)>> = BTreeMap::new();
    for (k, i, m) in &walk.stale {
        stale.entry(*k).or_default().push((*i, m));
    }
    let mut pairs = Vec::new();
    for k in walk.first_eval..walk.failed.len() {
        let model = walk.train(k, &options.hyperparams)?;
        let own = std::iter::once((k, &walk.standard[k].matrix));
        for (i, matrix) in own.chain(stale.remove(&k).unwrap_or_default()) {
            let build = walk.build(i);
            pairs.push(DecayPair {
                model_build: walk.build(k).id,
                build: build.id,
                rw: i - k,
                apfdc: apfdc(&model.predict(matrix)?.tests(), build)?,
            });
        }
    }
    Ok(DecayCurve::from_pairs(pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ExecutionRecord, Verdict};

    fn build(records: &[(&str, Verdict, u64)]) -> Build {
        let mut b = Build::new(BuildId(1), Vec::new());
        b.records = records
            .iter()
            .map(|&(t, verdict, duration_ms)| ExecutionRecord {
                build: BuildId(1),
                test: TestId::new(t).unwrap(),
                verdict,
                duration_ms,
            })
            .collect();
        b
    }

    #[test]
    fn random_expectation_matches_permutation_average() {
        let b = build(&[("a", Verdict::AssertionFailure, 5), ("b", Verdict::Passed, 1), ("c", Verdict::ExceptionFailure, 2), ("d", Verdict::Passed, 7)]);
        let tests = b.tests();
        let mut sum = 0.0;
        let mut count = 0;
        let mut idx: Vec<usize> = (0..4).collect();
        // Heap's algorithm over all 24 orderings
        fn permute(k: usize, idx: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
            if k == 1 {
                f(idx);
                return;
            }
            for i in 0..k {
                permute(k - 1, idx, f);
                let j = if k % 2 == 0 { i } else { 0 };
                idx.swap(j, k - 1);
            }
        }
        permute(4, &mut idx, &mut |p| {
            let order: Vec<TestId> = p.iter().map(|&i| tests[i].clone()).collect();
            sum += apfdc(&order, &b).unwrap();
            count += 1;
        });
        assert_eq!(count, 24);
        assert!((expected_random_apfdc(&b).unwrap() - sum / 24.0).abs() < 1e-12);
        assert!(expected_random_apfdc(&build(&[("a", Verdict::Passed, 1)])).is_err());
    }

    #[test]
    fn summary_statistics() {
        assert_eq!(mean_sd(&[0.5]), (0.5, 0.0));
        let (m, sd) = mean_sd(&[1.0, 2.0, 3.0]);
        assert_eq!((m, sd), (2.0, 1.0));
    }
}
