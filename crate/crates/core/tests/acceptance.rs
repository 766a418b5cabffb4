//! The nine acceptance criteria. Runs without the libtest harness so that
//! every criterion prints exactly one PASS/FAIL line.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use citcp::catalog::FeatureCatalog;
use citcp::classifier::train_classifier;
use citcp::classifier::BoostParams;
use citcp::coverage::CoChangeIndex;
use citcp::evaluation::{
    apfdc, decay_experiment, failure_counts, measure_builds, optimal_ordering, remove_frequent_failers,
    run_pipeline_eval, three_sigma_threshold, EvalInputs, EvalOptions, Strategy,
};
use citcp::features::{FeatureMatrix, FeatureOptions, FeatureVector};
use citcp::ingest::SynthConfig;
use citcp::ranker::{Hyperparams, LabeledMatrix, RankingModel};
use citcp::{
    Build, BuildHistory, BuildId, Commit, CommitId, ExecutionRecord, FeatureGroup, FileChange, TestId, Verdict,
};
use common::{apfdc_direct, keyword_corpus, permutations, random_build, synthetic};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.1?}, limit {limit:?}"))
}

fn apfdc_oracle() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut orderings = 0usize;
    let mut worst = 0.0f64;
    for case in 0..500 {
        let n = rng.random_range(1..=6);
        let build = random_build(&mut rng, n);
        let best = apfdc(&optimal_ordering(&build).tests(), &build).map_err(|e| e.to_string())?;
        let mut max = f64::MIN;
        for order in permutations(&build.tests()) {
            let got = apfdc(&order, &build).map_err(|e| e.to_string())?;
            let want = apfdc_direct(&order, &build);
            worst = worst.max((got - want).abs());
            ensure((got - want).abs() <= 1e-12, || format!("case {case}: {got} vs direct {want}"))?;
            max = max.max(got);
            orderings += 1;
        }
        ensure((best - max).abs() <= 1e-12, || format!("case {case}: optimal {best} < max {max}"))?;
    }
    within(t.elapsed(), Duration::from_secs(30))?;
    Ok(format!("500 builds, {orderings} orderings, max |diff| {worst:.1e}, {:.1?}", t.elapsed()))
}

fn commit(n: usize, files: &[String]) -> Commit {
    Commit {
        id: CommitId(format!("c{n}")),
        timestamp: n as i64,
        author: "dev".into(),
        message: "change".into(),
        file_changes: files
            .iter()
            .map(|f| FileChange {
                path: f.clone(),
                lines_added: 1,
                ..Default::default()
            })
            .collect(),
    }
}

fn association_oracle() -> Outcome {
    let t = Instant::now();
    let example: Vec<Vec<String>> = [&["f1", "f2", "f3"][..], &["f1", "f3"], &["f2"], &["f1", "f2", "f3", "f4"]]
        .iter()
        .map(|s| s.iter().map(|f| f.to_string()).collect())
        .collect();
    let commits: Vec<Commit> = example.iter().enumerate().map(|(i, f)| commit(i, f)).collect();
    let s = CoChangeIndex::from_commits(&commits).scores("f1", "f3");
    ensure((s.support, s.confidence, s.lift) == (0.75, 1.0, 1.0 / 3.0), || format!("example gave {s:?}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pool: Vec<String> = (0..6).map(|i| format!("src/F{i}.java")).collect();
    let mut checked = 0;
    for case in 0..200 {
        let sets: Vec<Vec<String>> = (0..rng.random_range(1..=12))
            .map(|_| {
                let mut s: Vec<String> = pool.iter().filter(|_| rng.random::<f64>() < 0.4).cloned().collect();
                if s.is_empty() {
                    s.push(pool[rng.random_range(0..pool.len())].clone());
                }
                s
            })
            .collect();
        let commits: Vec<Commit> = sets.iter().enumerate().map(|(i, f)| commit(i, f)).collect();
        let index = CoChangeIndex::from_commits(&commits);
        let n = sets.len() as f64;
        for f in &pool {
            for g in pool.iter().filter(|g| *g != f) {
                let cnt = |x: &String| sets.iter().filter(|s| s.contains(x)).count() as f64;
                let pair = sets.iter().filter(|s| s.contains(f) && s.contains(g)).count() as f64;
                let div = |a: f64, b: f64| if a == 0.0 || b == 0.0 { 0.0 } else { a / b };
                let want = (div(pair, n), div(pair, cnt(f)), div(pair, cnt(f) * cnt(g)));
                let got = index.scores(f, g);
                ensure((got.support, got.confidence, got.lift) == want, || {
                    format!("case {case} ({f},{g}): {got:?} vs {want:?}")
                })?;
                checked += 1;
            }
        }
    }
    within(t.elapsed(), Duration::from_secs(10))?;
    Ok(format!("example (0.75, 1, 1/3); {checked} pairs over 200 histories, {:.1?}", t.elapsed()))
}

fn catalog_and_leakage() -> Outcome {
    let committed = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/catalog/features.csv"))
        .map_err(|e| e.to_string())?;
    let committed = FeatureCatalog::parse(&committed).map_err(|e| e.to_string())?;

    let loaded = synthetic(&SynthConfig { builds: 60, tests: 40, files: 80, ..SynthConfig::default() }, 3);
    let history = &loaded.dataset.history;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut positions: Vec<usize> = (0..history.builds().len()).collect();
    positions.shuffle(&mut rng);
    positions.truncate(50);
    let options = FeatureOptions::default();
    let mut cells = 0usize;
    for &pos in &positions {
        let wanted = BTreeSet::from([pos]);
        let before = measure_builds(&loaded.inputs(), &options, &wanted).map_err(|e| e.to_string())?;
        let matrix = &before[&pos];
        ensure(matrix.catalog.len() == 150, || format!("{} columns", matrix.catalog.len()))?;
        ensure(matrix.catalog.defs() == committed.defs(), || "columns differ from catalog/features.csv".into())?;
        ensure(matrix.rows.iter().all(|r| r.values.len() == 150), || "ragged row".into())?;

        let mut mutated = history.clone();
        for r in &mut mutated.builds_mut()[pos].records {
            r.verdict = if r.verdict.is_failed() { Verdict::Passed } else { Verdict::ExceptionFailure };
            r.duration_ms = rng.random_range(0..100_000);
        }
        let inputs = EvalInputs { history: &mutated, ..loaded.inputs() };
        let after = measure_builds(&inputs, &options, &wanted).map_err(|e| e.to_string())?;
        let same = matrix.rows.len() == after[&pos].rows.len()
            && matrix.rows.iter().zip(&after[&pos].rows).all(|(a, b)| {
                a.test == b.test && a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits())
            });
        ensure(same, || format!("build at position {pos} changed with its own verdicts"))?;
        cells += matrix.rows.len() * 150;
    }
    Ok(format!("150 columns match the catalog; 50 builds ({cells} cells) unchanged under verdict mutation"))
}

fn learning_signal() -> Outcome {
    let t = Instant::now();
    let loaded = synthetic(&SynthConfig::default(), 7);
    let report = run_pipeline_eval(&loaded.inputs(), &EvalOptions::default()).map_err(|e| e.to_string())?;
    let mean = |s| report.mean(s).unwrap();
    let (full, random, heuristic) = (mean(Strategy::Full), mean(Strategy::Random), mean(Strategy::Heuristic));
    let line = format!(
        "{} builds: full {full:.3}, random {random:.3}, heuristic F_FailRate_Total:desc {heuristic:.3}, optimal {:.3}, {:.1?}",
        report.evaluated_builds.len(),
        mean(Strategy::Optimal),
        t.elapsed()
    );
    ensure(full >= random + 0.10, || format!("full not 0.10 above random; {line}"))?;
    ensure(full >= 0.70, || format!("full below 0.70; {line}"))?;
    within(t.elapsed(), Duration::from_secs(300))?;
    Ok(line)
}

fn three_sigma() -> Outcome {
    let record = |b: u64, test: &str, failed: bool| ExecutionRecord {
        build: BuildId(b),
        test: TestId::new(test).unwrap(),
        verdict: if failed { Verdict::AssertionFailure } else { Verdict::Passed },
        duration_ms: 10,
    };
    let mut builds = Vec::new();
    for b in 1..=50u64 {
        let mut build = Build::new(BuildId(b), Vec::new());
        build.records.push(record(b, "ExtremeTest.java", true));
        for i in 1..=49u64 {
            build.records.push(record(b, &format!("T{i:02}Test.java"), i == b));
        }
        builds.push(build);
    }
    let history = BuildHistory::new(builds).map_err(|e| e.to_string())?;
    let counts: Vec<u64> = failure_counts(&history).into_values().collect();
    // mean 99/50 = 1.98; sample variance 2352.98/49 = 48.02; 1.98 + 3 * 6.9297 = 22.769
    let threshold = three_sigma_threshold(&counts).unwrap();
    ensure((threshold - 22.769).abs() < 1e-3, || format!("threshold {threshold}"))?;
    let (filtered, removed) = remove_frequent_failers(&history);
    ensure(removed == vec![TestId::new("ExtremeTest.java").unwrap()], || format!("removed {removed:?}"))?;
    ensure(filtered.failed_builds().count() == 49, || "build 50 should become passing".into())?;

    let uniform: Vec<Build> = (1..=10u64)
        .map(|b| {
            let mut build = Build::new(BuildId(b), Vec::new());
            build.records = (0..10u64).map(|i| record(b, &format!("U{i}Test.java"), (b + i) % 3 == 0)).collect();
            build
        })
        .collect();
    let (_, none) = remove_frequent_failers(&BuildHistory::new(uniform).map_err(|e| e.to_string())?);
    ensure(none.is_empty(), || format!("uniform fixture removed {none:?}"))?;
    Ok(format!("threshold {threshold:.3}; only the extreme test removed; uniform fixture removes none"))
}

fn decay() -> Outcome {
    let t = Instant::now();
    let loaded = synthetic(&SynthConfig { drift_period: Some(5), ..SynthConfig::default() }, 7);
    let options = EvalOptions::default();
    let curve = decay_experiment(&loaded.inputs(), &options).map_err(|e| e.to_string())?;
    let report = run_pipeline_eval(&loaded.inputs(), &options).map_err(|e| e.to_string())?;
    let standard: BTreeMap<BuildId, f64> = report.values(Strategy::Full).into_iter().collect();
    let rw0: Vec<_> = curve.pairs_at(0).collect();
    ensure(rw0.len() == standard.len(), || format!("{} RW=0 pairs, {} evaluated builds", rw0.len(), standard.len()))?;
    for p in &rw0 {
        let want = standard.get(&p.build).copied();
        ensure(want.map(f64::to_bits) == Some(p.apfdc.to_bits()), || {
            format!("build {}: decay {} vs standard {want:?}", p.build, p.apfdc)
        })?;
    }
    let rws: Vec<usize> = curve.points.iter().map(|p| p.rw).collect();
    ensure(rws == (0..=11).collect::<Vec<_>>(), || format!("RW domain {rws:?}"))?;
    let slope = curve.slope(0..=11).ok_or("no slope")?;
    ensure(slope < 0.0, || format!("slope {slope}"))?;
    Ok(format!(
        "slope {slope:.4} over RW 0..11 (RW0 {:.3}, RW11 {:.3}); {} RW=0 values bit-identical, {:.1?}",
        curve.points[0].mean_apfdc,
        curve.points[11].mean_apfdc,
        rw0.len(),
        t.elapsed()
    ))
}

/// Rows labeled by F_FailRate_Total > 0.8, with uniform noise in three other
/// columns. `gap` leaves a margin around the threshold.
fn toy(rng: &mut ChaCha8Rng, rows: usize, gap: bool) -> LabeledMatrix {
    let catalog = FeatureCatalog::standard();
    let informative = catalog.index_of("F_FailRate_Total").unwrap();
    let noise: Vec<usize> = ["F_Age", "F_LastExeTime", "F_CovCCount"]
        .iter()
        .map(|n| catalog.index_of(n).unwrap())
        .collect();
    let mut labels = Vec::new();
    let rows = (0..rows)
        .map(|i| {
            let mut values = vec![0.0; catalog.len()];
            let mut x: f64 = rng.random();
            if gap {
                x = if x > 0.8 { 0.85 + 0.15 * rng.random::<f64>() } else { 0.75 * rng.random::<f64>() };
            }
            values[informative] = x;
            for &c in &noise {
                values[c] = rng.random();
            }
            labels.push(if x > 0.8 { 1.0 } else { 0.0 });
            FeatureVector { build: BuildId(1), test: TestId::new(format!("T{i}Test.java")).unwrap(), values }
        })
        .collect();
    LabeledMatrix { matrix: FeatureMatrix { build: BuildId(1), catalog: Arc::clone(&catalog), rows }, labels }
}

fn auc(scores: &[f64], labels: &[f64]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (s, _) in scores.iter().zip(labels).filter(|(_, &l)| l == 1.0) {
        for (n, _) in scores.iter().zip(labels).filter(|(_, &l)| l == 0.0) {
            pairs += 1.0;
            wins += if s > n { 1.0 } else if s == n { 0.5 } else { 0.0 };
        }
    }
    wins / pairs
}

fn usage_wins(seeds: std::ops::Range<u64>, hp: &Hyperparams) -> Result<usize, String> {
    let mut wins = 0;
    for seed in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let train = toy(&mut rng, 200, false);
        let hp = Hyperparams { seed, ..hp.clone() };
        let model = RankingModel::train(&[train], &FeatureCatalog::standard(), &hp, BuildId(2)).map_err(|e| e.to_string())?;
        let usage: BTreeMap<String, u64> = model.feature_usage().into_iter().collect();
        let top_noise = ["F_Age", "F_LastExeTime", "F_CovCCount"].iter().map(|n| usage[*n]).max().unwrap();
        wins += usize::from(usage["F_FailRate_Total"] > top_noise);
    }
    Ok(wins)
}

fn ranker_sanity() -> Outcome {
    let catalog = FeatureCatalog::standard();
    let hp = Hyperparams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let train = toy(&mut rng, 300, false);
    let a = RankingModel::train(std::slice::from_ref(&train), &catalog, &hp, BuildId(2)).map_err(|e| e.to_string())?;
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = single
        .install(|| RankingModel::train(std::slice::from_ref(&train), &catalog, &hp, BuildId(2)))
        .map_err(|e| e.to_string())?;
    let json = a.to_json().map_err(|e| e.to_string())?;
    ensure(json == b.to_json().map_err(|e| e.to_string())?, || "retrained model JSON differs".into())?;

    let area_of = |m: &LabeledMatrix| {
        let scores: Vec<f64> = m.matrix.rows.iter().map(|r| a.score(&r.values)).collect();
        auc(&scores, &m.labels)
    };
    let area = area_of(&train);
    ensure(area == 1.0, || format!("training AUC {area}"))?;
    let held_out = area_of(&toy(&mut rng, 300, true));

    // per-bag feature sampling is off: bags that never see the informative
    // column memorize labels with noise splits and dominate split counts
    let full_columns = Hyperparams { feature_rate: 1.0, ..Hyperparams::default() };
    let wins = usage_wins(0..100, &full_columns)?;
    ensure(wins >= 95, || format!("informative feature on top in {wins}/100 runs"))?;
    let sampled = usage_wins(0..5, &Hyperparams::default())?;
    Ok(format!(
        "identical JSON ({} bytes); training AUC {area} (held-out {held_out:.4}); informative on top in {wins}/100 runs (feature_rate 1.0; {sampled}/5 at feature_rate 0.3)",
        json.len()
    ))
}

fn classifier() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let corpus = keyword_corpus(&mut rng, 500);
    let (_, accuracy) = train_classifier(&corpus, 5, &BoostParams::default()).map_err(|e| e.to_string())?;
    ensure(accuracy >= 0.95, || format!("five-fold accuracy {accuracy:.4}"))?;
    Ok(format!("five-fold accuracy {accuracy:.4} on 500 messages"))
}

fn timing() -> Outcome {
    let loaded = synthetic(&SynthConfig { builds: 25, tests: 30, files: 50, ..SynthConfig::default() }, 9);
    let options = EvalOptions { hyperparams: Hyperparams { bags: 10, ..Hyperparams::default() }, ..EvalOptions::default() };
    let report = run_pipeline_eval(&loaded.inputs(), &options).map_err(|e| e.to_string())?;
    let timing = &report.timing;
    ensure(timing.groups.len() == 9, || format!("{} groups", timing.groups.len()))?;
    for g in &timing.groups {
        ensure(g.t == g.p + g.m, || format!("{}: T {} != P {} + M {}", g.group.as_str(), g.t, g.p, g.m))?;
        ensure(g.p >= 0.0 && g.m >= 0.0, || format!("{}: negative time", g.group.as_str()))?;
    }
    let chn = timing.get(FeatureGroup::TES_CHN).ok_or("no TES_CHN row")?;
    ensure(chn.p == 0.0, || format!("TES_CHN P = {}", chn.p))?;
    let com = timing.get(FeatureGroup::TES_COM).unwrap();
    ensure(com.p > 0.0, || "TES_COM preprocessing not recorded".into())?;

    let last = loaded.dataset.history.builds().len() - 1;
    let wanted = BTreeSet::from([last]);
    let m1 = measure_builds(&loaded.inputs(), &options.features, &wanted).map_err(|e| e.to_string())?;
    let m2 = measure_builds(&loaded.inputs(), &options.features, &wanted).map_err(|e| e.to_string())?;
    ensure(m1[&last].rows == m2[&last].rows, || "repeated measurement changed feature values".into())?;
    Ok(format!("T = P + M for 9 groups over {} builds; TES_CHN P = 0; TES_COM P {:.2e} s", timing.builds, com.p))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("APFD_C oracle", apfdc_oracle),
        ("association mining oracle", association_oracle),
        ("feature catalog and anti-leakage", catalog_and_leakage),
        ("end-to-end learning signal", learning_signal),
        ("three-sigma removal", three_sigma),
        ("decay behavior", decay),
        ("ranker sanity", ranker_sanity),
        ("commit classifier", classifier),
        ("timing report structure", timing),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.iter().any(|o| name.contains(o.as_str())) {
            continue;
        }
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
