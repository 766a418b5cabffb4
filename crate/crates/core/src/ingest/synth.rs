use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};

use rand::seq::{index, IndexedRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use super::dataset::{write_commits_jsonl, BUILDS_CSV, COMMITS_JSONL, EXEC_RECORDS_CSV};
use super::git::ingest_git_history;
use crate::error::{Error, Result};

/// Parameters of a generated history. Every test truly covers a few SUT
/// files; a test fails with probability
/// `base + weight * age_factor * (1 - 0.5^hits)`, where `hits` counts its
/// covered files changed in the build.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub files: usize,
    pub tests: usize,
    pub builds: usize,
    pub packages: usize,
    pub coverage_per_test: usize,
    pub deps_per_file: usize,
    pub min_commits_per_build: usize,
    pub max_commits_per_build: usize,
    pub max_files_per_commit: usize,
    /// Chance that a changed SUT file is accompanied by a change to one of
    /// the tests covering it.
    pub test_cochange_rate: f64,
    pub failure_weight: f64,
    pub base_failure_rate: f64,
    /// Builds after which a test's failure strength has dropped to 3/4.
    pub age_scale: f64,
    /// Share of tests introduced after the first build.
    pub late_test_fraction: f64,
    pub flaky_tests: usize,
    pub flaky_rate: f64,
    pub fix_message_rate: f64,
    pub duration_median_ms: f64,
    pub duration_sigma: f64,
    /// Emit a second, smaller CI job per build.
    pub secondary_job: bool,
    /// Re-draw every test's true coverage every this many builds.
    pub drift_period: Option<usize>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            files: 200,
            tests: 100,
            builds: 60,
            packages: 10,
            coverage_per_test: 4,
            deps_per_file: 2,
            min_commits_per_build: 1,
            max_commits_per_build: 3,
            max_files_per_commit: 3,
            test_cochange_rate: 0.5,
            failure_weight: 0.9,
            base_failure_rate: 0.003,
            age_scale: 40.0,
            late_test_fraction: 0.2,
            flaky_tests: 0,
            flaky_rate: 0.6,
            fix_message_rate: 0.3,
            duration_median_ms: 2000.0,
            duration_sigma: 1.0,
            secondary_job: true,
            drift_period: None,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("files", self.files),
            ("tests", self.tests),
            ("builds", self.builds),
            ("packages", self.packages),
            ("coverage_per_test", self.coverage_per_test),
            ("min_commits_per_build", self.min_commits_per_build),
            ("max_files_per_commit", self.max_files_per_commit),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.max_commits_per_build < self.min_commits_per_build {
            return Err(Error::InvalidConfig("max_commits_per_build < min_commits_per_build".into()));
        }
        if self.coverage_per_test > self.files {
            return Err(Error::InvalidConfig("coverage_per_test exceeds files".into()));
        }
        if self.flaky_tests > self.tests {
            return Err(Error::InvalidConfig("flaky_tests exceeds tests".into()));
        }
        for (name, p) in [
            ("test_cochange_rate", self.test_cochange_rate),
            ("failure_weight", self.failure_weight),
            ("base_failure_rate", self.base_failure_rate),
            ("late_test_fraction", self.late_test_fraction),
            ("flaky_rate", self.flaky_rate),
            ("fix_message_rate", self.fix_message_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(self.duration_median_ms > 0.0) || !(self.duration_sigma >= 0.0) || !(self.age_scale > 0.0) {
            return Err(Error::InvalidConfig("durations and age_scale must be positive".into()));
        }
        if self.drift_period == Some(0) {
            return Err(Error::InvalidConfig("drift_period must be positive".into()));
        }
        Ok(())
    }
}

/// Coverage that held from `from_build` on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageEpoch {
    pub from_build: u64,
    pub coverage: BTreeMap<String, Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectedFailures {
    pub build: u64,
    pub tests: Vec<String>,
}

/// Hidden facts behind a generated dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub config: SynthConfig,
    pub epochs: Vec<CoverageEpoch>,
    pub flaky_tests: Vec<String>,
    pub failures: Vec<InjectedFailures>,
}

pub const GROUND_TRUTH_JSON: &str = "ground_truth.json";

const AUTHORS: [&str; 6] = ["Alice Moreau", "Bo Lindqvist", "Chen Wei", "Dara Okafor", "Eli Novak", "Femi Adeyemi"];
/// Relative commit frequency of each author.
const AUTHOR_WEIGHTS: [u32; 6] = [30, 25, 20, 12, 8, 5];

const FIX_MESSAGES: [&str; 4] = ["Fix bug in", "Fix crash in", "Repair defect in", "Patch fault in"];
const OTHER_MESSAGES: [&str; 4] = ["Add feature to", "Refactor", "Update", "Clean up"];

#[derive(Clone, Debug)]
struct Method {
    params: usize,
    body: Vec<String>,
}

#[derive(Clone, Debug)]
struct SutFile {
    package: usize,
    deps: Vec<usize>,
    methods: Vec<Method>,
}

fn sut_class(i: usize) -> String {
    format!("C{i}")
}

fn sut_path(files: &[SutFile], i: usize) -> String {
    format!("src/main/java/p{}/{}.java", files[i].package, sut_class(i))
}

fn test_path(j: usize) -> String {
    format!("src/test/java/t/T{j}Test.java")
}

fn statement(rng: &mut ChaCha8Rng, n: usize) -> String {
    match rng.random_range(0..5) {
        0 => format!("int v{n} = a + {n};"),
        1 => format!("if (a > {n}) {{ a -= {n}; }}"),
        2 => format!("for (int i = 0; i < {n}; i++) {{ a += i; }}"),
        3 => format!("while (a > {n} && a % 2 == 0) {{ a /= 2; }}"),
        _ => format!("a = a > {n} ? a - 1 : a + 1;"),
    }
}

fn new_method(rng: &mut ChaCha8Rng, counter: &mut usize) -> Method {
    let len = rng.random_range(1..8);
    let body = (0..len)
        .map(|_| {
            *counter += 1;
            statement(rng, *counter)
        })
        .collect();
    Method {
        params: rng.random_range(1..5),
        body,
    }
}

fn render_sut(files: &[SutFile], i: usize) -> String {
    let f = &files[i];
    let mut s = format!("package p{};\n\n", f.package);
    for &d in &f.deps {
        let _ = writeln!(s, "import p{}.{};", files[d].package, sut_class(d));
    }
    let _ = write!(s, "\n/** Generated component {i}. */\npublic class {} {{\n    private int state;\n", sut_class(i));
    for (m, method) in f.methods.iter().enumerate() {
        let params: Vec<String> = (0..method.params)
            .map(|p| if p == 0 { "int a".to_string() } else { format!("int b{p}") })
            .collect();
        let _ = write!(s, "\n    public int m{m}({}) {{\n", params.join(", "));
        for line in &method.body {
            let _ = writeln!(s, "        {line}");
        }
        s.push_str("        return a + state;\n    }\n");
    }
    s.push_str("}\n");
    s
}

fn render_test(files: &[SutFile], j: usize, covered: &[usize], revision: usize) -> String {
    let mut s = String::from("package t;\n\n");
    for &c in covered {
        let _ = writeln!(s, "import p{}.{};", files[c].package, sut_class(c));
    }
    let _ = write!(s, "\npublic class T{j}Test {{\n");
    for (k, &c) in covered.iter().enumerate() {
        let _ = write!(
            s,
            "\n    // revision {revision}\n    public void test{k}() {{\n        {cls} x = new {cls}();\n        check(x.m0({k}) >= 0);\n    }}\n",
            cls = sut_class(c)
        );
    }
    s.push_str("\n    private void check(boolean ok) {\n        if (!ok) {\n            throw new AssertionError();\n        }\n    }\n}\n");
    s
}

struct PendingCommit {
    author: usize,
    message: String,
    files: Vec<(String, Option<String>)>,
}

/// Days since 1970-01-01 to (year, month, day).
fn civil_from_days(z: i64) -> (i64, u32, u32) {
    let z = z + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    (yoe + era * 400 + i64::from(m <= 2), m, d)
}

fn iso8601(secs: i64) -> String {
    let (y, m, d) = civil_from_days(secs.div_euclid(86_400));
    let s = secs.rem_euclid(86_400);
    format!("{y:04}-{m:02}-{d:02}T{:02}:{:02}:{:02}Z", s / 3600, s % 3600 / 60, s % 60)
}

const EPOCH: i64 = 1_600_000_000;

fn fast_import(repo: &Path, commits: &[PendingCommit]) -> Result<Vec<String>> {
    let git = |args: &[&str]| -> Result<()> {
        let st = Command::new("git")
            .arg("-C")
            .arg(repo)
            .args(args)
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status()?;
        if st.success() {
            Ok(())
        } else {
            Err(Error::Git(format!("git {} failed", args.join(" "))))
        }
    };
    std::fs::create_dir_all(repo)?;
    git(&["init", "-q"])?;
    git(&["symbolic-ref", "HEAD", "refs/heads/main"])?;
    let mut stream = Vec::new();
    for (n, c) in commits.iter().enumerate() {
        let who = AUTHORS[c.author];
        let email = who.split(' ').next().unwrap().to_lowercase();
        let ts = EPOCH + n as i64 * 3600;
        let _ = write!(
            stream,
            "commit refs/heads/main\nmark :{}\nauthor {who} <{email}@example.org> {ts} +0000\ncommitter {who} <{email}@example.org> {ts} +0000\ndata {}\n{}\n",
            n + 1,
            c.message.len(),
            c.message
        );
        if n > 0 {
            let _ = writeln!(stream, "from :{n}");
        }
        for (path, content) in &c.files {
            match content {
                Some(text) => {
                    let _ = write!(stream, "M 100644 inline {path}\ndata {}\n{text}\n", text.len());
                }
                None => {
                    let _ = writeln!(stream, "D {path}");
                }
            }
        }
        stream.push(b'\n');
    }
    let marks = repo.join(".git").join("synth-marks");
    let mut child = Command::new("git")
        .arg("-C")
        .arg(repo)
        .args(["fast-import", "--quiet"])
        .arg(format!("--export-marks={}", marks.display()))
        .stdin(Stdio::piped())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()?;
    child.stdin.take().expect("piped stdin").write_all(&stream)?;
    let out = child.wait_with_output()?;
    if !out.status.success() {
        return Err(Error::Git(String::from_utf8_lossy(&out.stderr).into_owned()));
    }
    let text = std::fs::read_to_string(&marks)?;
    std::fs::remove_file(&marks)?;
    let mut hashes = vec![String::new(); commits.len()];
    for line in text.lines() {
        if let Some((mark, hash)) = line.trim_start_matches(':').split_once(' ') {
            if let Ok(m) = mark.parse::<usize>() {
                hashes[m - 1] = hash.to_string();
            }
        }
    }
    Ok(hashes)
}

/// Writes a dataset (git repository, `builds.csv`, `exec_records.csv`,
/// `commits.jsonl`, `ground_truth.json`) to `out`. Identical seeds give
/// identical files.
pub fn generate_synthetic_history(config: &SynthConfig, seed: u64, out: &Path) -> Result<GroundTruth> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = config;
    let mut counter = 0usize;

    let mut files: Vec<SutFile> = (0..c.files)
        .map(|i| SutFile {
            package: i % c.packages,
            deps: Vec::new(),
            methods: Vec::new(),
        })
        .collect();
    for i in 0..c.files {
        let n = c.deps_per_file.min(c.files - 1);
        let mut deps: Vec<usize> = index::sample(&mut rng, c.files - 1, n)
            .into_iter()
            .map(|d| if d >= i { d + 1 } else { d })
            .collect();
        deps.sort_unstable();
        files[i].deps = deps;
        let methods = rng.random_range(1..5);
        files[i].methods = (0..methods).map(|_| new_method(&mut rng, &mut counter)).collect();
    }

    let draw_coverage = |rng: &mut ChaCha8Rng| -> Vec<Vec<usize>> {
        (0..c.tests)
            .map(|_| {
                let mut v = index::sample(rng, c.files, c.coverage_per_test).into_vec();
                v.sort_unstable();
                v
            })
            .collect()
    };
    let mut coverage = draw_coverage(&mut rng);
    let intro: Vec<usize> = (0..c.tests)
        .map(|_| {
            if c.builds > 1 && rng.random::<f64>() < c.late_test_fraction {
                rng.random_range(1..c.builds.div_ceil(2).max(2))
            } else {
                0
            }
        })
        .collect();
    let mut flaky: Vec<usize> = index::sample(&mut rng, c.tests, c.flaky_tests).into_vec();
    flaky.sort_unstable();
    let duration = LogNormal::new(c.duration_median_ms.ln(), c.duration_sigma)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let base_ms: Vec<f64> = (0..c.tests).map(|_| duration.sample(&mut rng)).collect();
    let jitter = Normal::new(0.0, 0.1).expect("valid normal");
    let author_of = |rng: &mut ChaCha8Rng| -> usize {
        let total: u32 = AUTHOR_WEIGHTS.iter().sum();
        let mut x = rng.random_range(0..total);
        for (i, w) in AUTHOR_WEIGHTS.iter().enumerate() {
            if x < *w {
                return i;
            }
            x -= w;
        }
        0
    };

    let mut revisions = vec![0usize; c.tests];
    let mut epochs = vec![CoverageEpoch {
        from_build: 1,
        coverage: BTreeMap::new(),
    }];
    let mut commits: Vec<PendingCommit> = Vec::new();
    let mut build_commits: Vec<Vec<usize>> = Vec::new();
    let mut build_changed: Vec<BTreeSet<usize>> = Vec::new();

    for b in 0..c.builds {
        let mut mine = Vec::new();
        let mut changed_sut = BTreeSet::new();
        if b == 0 {
            let mut all: Vec<(String, Option<String>)> =
                (0..c.files).map(|i| (sut_path(&files, i), Some(render_sut(&files, i)))).collect();
            for j in (0..c.tests).filter(|&j| intro[j] == 0) {
                all.push((test_path(j), Some(render_test(&files, j, &coverage[j], 0))));
            }
            commits.push(PendingCommit {
                author: 0,
                message: "Initial import".into(),
                files: all,
            });
            mine.push(commits.len() - 1);
        } else {
            if let Some(period) = c.drift_period {
                if b % period == 0 {
                    coverage = draw_coverage(&mut rng);
                    let mut touched = Vec::new();
                    for j in (0..c.tests).filter(|&j| intro[j] <= b) {
                        revisions[j] += 1;
                        touched.push((test_path(j), Some(render_test(&files, j, &coverage[j], revisions[j]))));
                    }
                    commits.push(PendingCommit {
                        author: author_of(&mut rng),
                        message: "Rework test suite".into(),
                        files: touched,
                    });
                    mine.push(commits.len() - 1);
                    epochs.push(CoverageEpoch {
                        from_build: b as u64 + 1,
                        coverage: BTreeMap::new(),
                    });
                }
            }
            let new_tests: Vec<(String, Option<String>)> = (0..c.tests)
                .filter(|&j| intro[j] == b)
                .map(|j| (test_path(j), Some(render_test(&files, j, &coverage[j], revisions[j]))))
                .collect();
            if !new_tests.is_empty() {
                commits.push(PendingCommit {
                    author: author_of(&mut rng),
                    message: "Add tests".into(),
                    files: new_tests,
                });
                mine.push(commits.len() - 1);
            }
            let n_commits = rng.random_range(c.min_commits_per_build..=c.max_commits_per_build);
            for _ in 0..n_commits {
                let n_files = rng.random_range(1..=c.max_files_per_commit.min(c.files));
                let targets = index::sample(&mut rng, c.files, n_files).into_vec();
                let mut touched = Vec::new();
                let mut tests_touched = BTreeSet::new();
                for &f in &targets {
                    mutate(&mut files[f], &mut rng, &mut counter);
                    touched.push((sut_path(&files, f), Some(render_sut(&files, f))));
                    changed_sut.insert(f);
                    if rng.random::<f64>() < c.test_cochange_rate {
                        let coverers: Vec<usize> = (0..c.tests)
                            .filter(|&j| intro[j] <= b && coverage[j].contains(&f))
                            .collect();
                        if let Some(&j) = coverers.choose(&mut rng) {
                            tests_touched.insert(j);
                        }
                    }
                }
                for j in tests_touched {
                    revisions[j] += 1;
                    touched.push((test_path(j), Some(render_test(&files, j, &coverage[j], revisions[j]))));
                }
                let fix = rng.random::<f64>() < c.fix_message_rate;
                let verb = if fix { FIX_MESSAGES.choose(&mut rng) } else { OTHER_MESSAGES.choose(&mut rng) };
                let names: Vec<String> = targets.iter().map(|&f| sut_class(f)).collect();
                commits.push(PendingCommit {
                    author: author_of(&mut rng),
                    message: format!("{} {}", verb.unwrap(), names.join(", ")),
                    files: touched,
                });
                mine.push(commits.len() - 1);
            }
        }
        let last = epochs.last_mut().unwrap();
        if last.coverage.is_empty() {
            last.coverage = (0..c.tests)
                .map(|j| (test_path(j), coverage[j].iter().map(|&f| sut_path(&files, f)).collect()))
                .collect();
        }
        build_commits.push(mine);
        build_changed.push(changed_sut);
    }

    std::fs::create_dir_all(out)?;
    let out = &std::fs::canonicalize(out)?;
    let repo = out.join("repo");
    if repo.exists() {
        std::fs::remove_dir_all(&repo)?;
    }
    let hashes = fast_import(&repo, &commits)?;

    let mut failures = Vec::new();
    let mut builds_csv = csv::Writer::from_path(out.join(BUILDS_CSV))?;
    builds_csv.write_record(["build_id", "timestamp_iso8601", "commits"])?;
    let mut exec_csv = csv::Writer::from_path(out.join(EXEC_RECORDS_CSV))?;
    exec_csv.write_record(["build_id", "job_id", "test_path", "verdict", "duration_ms"])?;
    let file_index: BTreeMap<String, usize> = (0..c.files).map(|i| (sut_path(&files, i), i)).collect();
    for b in 0..c.builds {
        let id = b as u64 + 1;
        let epoch = epochs.iter().rev().find(|e| e.from_build <= id).unwrap();
        let last_commit = *build_commits[b].last().unwrap_or(&0);
        let ids: Vec<&str> = build_commits[b].iter().map(|&i| hashes[i].as_str()).collect();
        builds_csv.write_record([id.to_string(), iso8601(EPOCH + last_commit as i64 * 3600 + 600), ids.join(";")])?;
        let mut failed = Vec::new();
        let mut secondary = 0;
        for j in (0..c.tests).filter(|&j| intro[j] <= b) {
            let path = test_path(j);
            let hits = epoch.coverage[&path]
                .iter()
                .filter(|p| build_changed[b].contains(&file_index[*p]))
                .count();
            let age = (b - intro[j]) as f64;
            let age_factor = 0.5 + 0.5 / (1.0 + age / c.age_scale);
            let strength = 1.0 - 0.5f64.powi(hits as i32);
            let mut p = c.base_failure_rate + c.failure_weight * age_factor * strength;
            if flaky.binary_search(&j).is_ok() {
                p = p.max(c.flaky_rate);
            }
            let fails = rng.random::<f64>() < p.min(1.0);
            let verdict = if !fails {
                0
            } else if rng.random::<f64>() < 0.7 {
                1
            } else {
                2
            };
            let ms = (base_ms[j] * (1.0 + jitter.sample(&mut rng))).max(1.0).round() as u64;
            if fails {
                failed.push(path.clone());
            }
            exec_csv.write_record([id.to_string(), "1".into(), path.clone(), verdict.to_string(), ms.to_string()])?;
            if c.secondary_job && secondary < 5 && j % 7 == 0 {
                secondary += 1;
                exec_csv.write_record([id.to_string(), "2".into(), path, "0".into(), (ms / 2).to_string()])?;
            }
        }
        if !failed.is_empty() {
            failures.push(InjectedFailures { build: id, tests: failed });
        }
    }
    builds_csv.flush()?;
    exec_csv.flush()?;

    let history = ingest_git_history(&repo, "HEAD")?;
    write_commits_jsonl(&history, &out.join(COMMITS_JSONL))?;

    let truth = GroundTruth {
        seed,
        config: config.clone(),
        epochs,
        flaky_tests: flaky.iter().map(|&j| test_path(j)).collect(),
        failures,
    };
    std::fs::write(out.join(GROUND_TRUTH_JSON), serde_json::to_string_pretty(&truth)?)?;
    Ok(truth)
}

fn mutate(file: &mut SutFile, rng: &mut ChaCha8Rng, counter: &mut usize) {
    *counter += 1;
    let roll = rng.random::<f64>();
    if roll < 0.15 || file.methods.is_empty() {
        file.methods.push(new_method(rng, counter));
        return;
    }
    let m = rng.random_range(0..file.methods.len());
    let body = &mut file.methods[m].body;
    if roll < 0.35 && body.len() > 1 {
        let at = rng.random_range(0..body.len());
        body.remove(at);
    } else {
        let at = rng.random_range(0..=body.len());
        body.insert(at, statement(rng, *counter));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iso_dates() {
        assert_eq!(iso8601(0), "1970-01-01T00:00:00Z");
        assert_eq!(iso8601(1_600_000_000), "2020-09-13T12:26:40Z");
        assert_eq!(iso8601(951_782_400), "2000-02-29T00:00:00Z");
    }

    #[test]
    fn invalid_configs() {
        let bad = SynthConfig { tests: 0, ..Default::default() };
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
        let bad = SynthConfig { failure_weight: 1.5, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(SynthConfig::default().validate().is_ok());
    }
}
