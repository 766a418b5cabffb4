use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    Build, BuildHistory, BuildId, Commit, CommitId, ExecutionRecord, FileChange, TestId, UnitRisk,
    Verdict,
};

pub const BUILDS_CSV: &str = "builds.csv";
pub const EXEC_RECORDS_CSV: &str = "exec_records.csv";
pub const COMMITS_JSONL: &str = "commits.jsonl";
/// Optional text file holding the path of the git repository.
pub const REPO_PATH_FILE: &str = "repo_path";

/// Files of a dataset directory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetLayout {
    pub root: PathBuf,
}

impl DatasetLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DatasetLayout { root: root.into() }
    }

    pub fn builds_csv(&self) -> PathBuf {
        self.root.join(BUILDS_CSV)
    }

    pub fn exec_records_csv(&self) -> PathBuf {
        self.root.join(EXEC_RECORDS_CSV)
    }

    pub fn commits_jsonl(&self) -> PathBuf {
        self.root.join(COMMITS_JSONL)
    }

    /// Source tree used when no repository is available.
    pub fn tree_dir(&self) -> PathBuf {
        self.root.join("tree")
    }

    /// `<root>/repo` if present, else the path named in `<root>/repo_path`.
    pub fn repo(&self) -> Option<PathBuf> {
        let local = self.root.join("repo");
        if local.is_dir() {
            return Some(local);
        }
        let text = std::fs::read_to_string(self.root.join(REPO_PATH_FILE)).ok()?;
        let p = PathBuf::from(text.trim());
        let p = if p.is_relative() { self.root.join(p) } else { p };
        p.is_dir().then_some(p)
    }
}

fn schema(path: &Path, row: usize, message: impl Into<String>) -> Error {
    Error::schema(path.display().to_string(), row, message)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| schema(path, 0, format!("cannot open: {e}")))
}

fn headers(reader: &mut csv::Reader<File>, path: &Path, expected: &[&str]) -> Result<()> {
    let got = reader.headers().map_err(|e| schema(path, 1, e.to_string()))?;
    let got: Vec<&str> = got.iter().collect();
    if got != expected {
        return Err(schema(path, 1, format!("expected header {}, got {}", expected.join(","), got.join(","))));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str, path: &Path, row: usize) -> Result<T> {
    let raw = rec.get(i).ok_or_else(|| schema(path, row, format!("missing column {name}")))?;
    raw.trim()
        .parse()
        .map_err(|_| schema(path, row, format!("column {name}: cannot parse {raw:?}")))
}

/// One row of `builds.csv`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuildRow {
    pub id: BuildId,
    pub timestamp: String,
    pub commits: Vec<CommitId>,
}

pub fn read_builds(path: &Path) -> Result<Vec<BuildRow>> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    headers(&mut reader, path, &["build_id", "timestamp_iso8601", "commits"])?;
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| schema(path, row, e.to_string()))?;
        let id: u64 = field(&rec, 0, "build_id", path, row)?;
        if !seen.insert(id) {
            return Err(schema(path, row, format!("duplicate build id {id}")));
        }
        let commits = rec
            .get(2)
            .unwrap_or("")
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| CommitId(s.to_string()))
            .collect();
        rows.push(BuildRow {
            id: BuildId(id),
            timestamp: rec.get(1).unwrap_or("").to_string(),
            commits,
        });
    }
    Ok(rows)
}

/// One row of `exec_records.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExecRow {
    pub build: BuildId,
    pub job: String,
    pub record: ExecutionRecord,
}

pub fn read_exec_records(path: &Path) -> Result<Vec<ExecRow>> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    headers(&mut reader, path, &["build_id", "job_id", "test_path", "verdict", "duration_ms"])?;
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| schema(path, row, e.to_string()))?;
        let build = BuildId(field(&rec, 0, "build_id", path, row)?);
        let job = rec.get(1).unwrap_or("").to_string();
        let test = TestId::new(rec.get(2).unwrap_or(""))
            .map_err(|_| schema(path, row, "empty test_path"))?;
        let code: u8 = field(&rec, 3, "verdict", path, row)?;
        let verdict = Verdict::from_code(code)
            .ok_or_else(|| schema(path, row, format!("verdict {code} not in 0..=3")))?;
        let duration_ms: u64 = field(&rec, 4, "duration_ms", path, row)?;
        if !seen.insert((build, job.clone(), test.clone())) {
            return Err(Error::DuplicateRecord {
                build: build.0,
                job,
                test: test.to_string(),
            });
        }
        rows.push(ExecRow {
            build,
            job,
            record: ExecutionRecord { build, test, verdict, duration_ms },
        });
    }
    Ok(rows)
}

/// Job with the most distinct tests; ties go to the smallest job id.
pub fn select_primary_job<R>(jobs: &BTreeMap<String, Vec<R>>, test_of: impl Fn(&R) -> &TestId) -> Result<String> {
    let mut best: Option<(&String, usize)> = None;
    for (job, records) in jobs {
        let n = records.iter().map(&test_of).collect::<BTreeSet<_>>().len();
        if best.is_none_or(|(_, m)| n > m) {
            best = Some((job, n));
        }
    }
    best.map(|(j, _)| j.clone()).ok_or(Error::EmptyBuild)
}

/// Builds from `builds.csv` with the records of each build's primary job.
pub fn ingest_exec_records(layout: &DatasetLayout) -> Result<BuildHistory> {
    let build_rows = read_builds(&layout.builds_csv())?;
    let exec_path = layout.exec_records_csv();
    let exec_rows = read_exec_records(&exec_path)?;
    let mut by_build: BTreeMap<BuildId, BTreeMap<String, Vec<ExecutionRecord>>> = BTreeMap::new();
    for r in exec_rows {
        by_build.entry(r.build).or_default().entry(r.job).or_default().push(r.record);
    }
    let known: BTreeSet<BuildId> = build_rows.iter().map(|b| b.id).collect();
    if let Some(orphan) = by_build.keys().find(|b| !known.contains(b)) {
        return Err(schema(&exec_path, 0, format!("build {orphan} is not listed in {BUILDS_CSV}")));
    }
    let mut builds = Vec::with_capacity(build_rows.len());
    for row in build_rows {
        let mut build = Build::new(row.id, row.commits);
        build.wall_clock = (!row.timestamp.is_empty()).then_some(row.timestamp);
        if let Some(mut jobs) = by_build.remove(&row.id) {
            let job = select_primary_job(&jobs, |r| &r.test)?;
            let mut records = jobs.remove(&job).unwrap_or_default();
            records.sort_by(|a, b| a.test.cmp(&b.test));
            build.records = records;
        }
        builds.push(build);
    }
    BuildHistory::new(builds)
}

/// Job id written for the single job of each build.
pub const PRIMARY_JOB: &str = "1";

pub fn write_builds(history: &BuildHistory, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["build_id", "timestamp_iso8601", "commits"])?;
    for b in history.builds() {
        let commits: Vec<&str> = b.change_set.commits.iter().map(|c| c.0.as_str()).collect();
        w.write_record([
            b.id.to_string(),
            b.wall_clock.clone().unwrap_or_default(),
            commits.join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_exec_records(history: &BuildHistory, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["build_id", "job_id", "test_path", "verdict", "duration_ms"])?;
    for b in history.builds() {
        for r in &b.records {
            w.write_record([
                r.build.to_string(),
                PRIMARY_JOB.to_string(),
                r.test.to_string(),
                r.verdict.code().to_string(),
                r.duration_ms.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct FileRecord {
    path: String,
    added: u32,
    deleted: u32,
    #[serde(default)]
    added_chunks: Vec<u32>,
    #[serde(default)]
    deleted_chunks: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    risk: Option<UnitRisk>,
}

#[derive(Serialize, Deserialize)]
struct CommitRecord {
    hash: String,
    timestamp: i64,
    author: String,
    message: String,
    files: Vec<FileRecord>,
}

pub fn read_commits_jsonl(path: &Path) -> Result<Vec<Commit>> {
    let reader = BufReader::new(open(path)?);
    let mut commits = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CommitRecord =
            serde_json::from_str(&line).map_err(|e| schema(path, i + 1, e.to_string()))?;
        let file_changes: Vec<FileChange> = rec
            .files
            .into_iter()
            .map(|f| FileChange {
                path: f.path,
                lines_added: f.added,
                lines_deleted: f.deleted,
                added_chunks: f.added_chunks,
                deleted_chunks: f.deleted_chunks,
                risk: f.risk,
            })
            .collect();
        for fc in &file_changes {
            fc.validate().map_err(|e| schema(path, i + 1, e.to_string()))?;
        }
        commits.push(Commit {
            id: CommitId(rec.hash),
            timestamp: rec.timestamp,
            author: rec.author,
            message: rec.message,
            file_changes,
        });
    }
    Ok(commits)
}

pub fn write_commits_jsonl(commits: &[Commit], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for c in commits {
        let rec = CommitRecord {
            hash: c.id.0.clone(),
            timestamp: c.timestamp,
            author: c.author.clone(),
            message: c.message.clone(),
            files: c
                .file_changes
                .iter()
                .map(|f| FileRecord {
                    path: f.path.clone(),
                    added: f.lines_added,
                    deleted: f.lines_deleted,
                    added_chunks: f.added_chunks.clone(),
                    deleted_chunks: f.deleted_chunks.clone(),
                    risk: f.risk,
                })
                .collect(),
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) {
        std::fs::write(dir.join(name), text).unwrap();
    }

    fn layout(builds: &str, exec: &str) -> (tempfile::TempDir, DatasetLayout) {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), BUILDS_CSV, builds);
        write(dir.path(), EXEC_RECORDS_CSV, exec);
        let layout = DatasetLayout::new(dir.path());
        (dir, layout)
    }

    const EXEC_HEADER: &str = "build_id,job_id,test_path,verdict,duration_ms\n";

    #[test]
    fn empty_records_keep_builds() {
        let (_d, l) = layout("build_id,timestamp_iso8601,commits\n1,2020-01-01T00:00:00Z,\n2,,\n", EXEC_HEADER);
        let h = ingest_exec_records(&l).unwrap();
        assert_eq!(h.builds().len(), 2);
        assert!(h.builds().iter().all(|b| b.records.is_empty()));
    }

    #[test]
    fn single_record() {
        let (_d, l) = layout(
            "build_id,timestamp_iso8601,commits\n1,,\n",
            &format!("{EXEC_HEADER}1,j,T.java,1,1200\n"),
        );
        let h = ingest_exec_records(&l).unwrap();
        let r = &h.builds()[0].records[0];
        assert_eq!(r.verdict, Verdict::AssertionFailure);
        assert_eq!(r.duration_ms, 1200);
    }

    #[test]
    fn primary_job_wins() {
        let mut exec = EXEC_HEADER.to_string();
        for t in 0..5 {
            exec.push_str(&format!("1,A,T{t}.java,0,1\n"));
        }
        for t in 0..3 {
            exec.push_str(&format!("1,B,U{t}.java,0,1\n"));
        }
        let (_d, l) = layout("build_id,timestamp_iso8601,commits\n1,,\n", &exec);
        let h = ingest_exec_records(&l).unwrap();
        assert_eq!(h.builds()[0].records.len(), 5);
        assert!(h.builds()[0].records.iter().all(|r| r.test.as_str().starts_with('T')));
    }

    fn jobs(spec: &[(&str, usize)]) -> BTreeMap<String, Vec<TestId>> {
        spec.iter()
            .map(|&(j, n)| (j.to_string(), (0..n).map(|i| TestId::new(format!("t{i}")).unwrap()).collect()))
            .collect()
    }

    #[test]
    fn job_selection() {
        assert_eq!(select_primary_job(&jobs(&[("j1", 3)]), |t| t).unwrap(), "j1");
        assert_eq!(select_primary_job(&jobs(&[("j1", 3), ("j2", 5)]), |t| t).unwrap(), "j2");
        assert_eq!(select_primary_job(&jobs(&[("j1", 4), ("j2", 4)]), |t| t).unwrap(), "j1");
        assert_eq!(select_primary_job(&jobs(&[("j2", 4), ("j1", 4)]), |t| t).unwrap(), "j1");
        assert!(matches!(select_primary_job(&jobs(&[]), |t| t), Err(Error::EmptyBuild)));
    }

    #[test]
    fn schema_errors_carry_row() {
        let (_d, l) = layout(
            "build_id,timestamp_iso8601,commits\n1,,\n",
            &format!("{EXEC_HEADER}1,j,T.java,0,1\n1,j,U.java,9,1\n"),
        );
        match ingest_exec_records(&l) {
            Err(Error::Schema { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
        let (_d, l) = layout("build_id,when,commits\n", EXEC_HEADER);
        assert!(matches!(ingest_exec_records(&l), Err(Error::Schema { .. })));
    }

    #[test]
    fn duplicate_record_rejected() {
        let (_d, l) = layout(
            "build_id,timestamp_iso8601,commits\n1,,\n",
            &format!("{EXEC_HEADER}1,j,T.java,0,1\n1,j,T.java,0,2\n"),
        );
        assert!(matches!(ingest_exec_records(&l), Err(Error::DuplicateRecord { .. })));
    }

    #[test]
    fn orphan_build_rejected() {
        let (_d, l) = layout("build_id,timestamp_iso8601,commits\n1,,\n", &format!("{EXEC_HEADER}2,j,T.java,0,1\n"));
        assert!(matches!(ingest_exec_records(&l), Err(Error::Schema { .. })));
    }

    #[test]
    fn commits_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let commits = vec![Commit {
            id: CommitId("abc".into()),
            timestamp: 7,
            author: "ann".into(),
            message: "line one\nline \"two\"".into(),
            file_changes: vec![FileChange {
                path: "a.java".into(),
                lines_added: 3,
                lines_deleted: 1,
                added_chunks: vec![1, 9],
                deleted_chunks: vec![4],
                risk: Some(UnitRisk::default()),
            }],
        }];
        let p = dir.path().join(COMMITS_JSONL);
        write_commits_jsonl(&commits, &p).unwrap();
        assert_eq!(read_commits_jsonl(&p).unwrap(), commits);
    }
}
