use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use crate::analysis::{parse_java, risk_delta, AnalyzerTable, UnitInfo};
use crate::error::{Error, Result};
use crate::model::{Commit, CommitId, FileChange};

use super::source::{SourceFile, SourceStore};

const NULL_OID: &str = "0000000000000000000000000000000000000000";

fn run_git(repo: &Path, args: &[&str]) -> Result<Vec<u8>> {
    let out = Command::new("git")
        .arg("-C")
        .arg(repo)
        .args(["-c", "core.quotepath=false"])
        .args(args)
        .stdin(Stdio::null())
        .output()
        .map_err(|e| Error::Git(format!("cannot run git: {e}")))?;
    if !out.status.success() {
        return Err(Error::Git(String::from_utf8_lossy(&out.stderr).trim().to_string()));
    }
    Ok(out.stdout)
}

fn check_repo(repo: &Path) -> Result<()> {
    if !repo.is_dir() || run_git(repo, &["rev-parse", "--git-dir"]).is_err() {
        return Err(Error::RepoNotFound(repo.to_path_buf()));
    }
    Ok(())
}

/// Resolves a revision to a commit hash. `Ok(None)` for a repository
/// without commits.
pub fn resolve_ref(repo: &Path, rev: &str) -> Result<Option<String>> {
    check_repo(repo)?;
    let spec = format!("{rev}^{{commit}}");
    match run_git(repo, &["rev-parse", "--verify", "--quiet", &spec]) {
        Ok(out) => Ok(Some(String::from_utf8_lossy(&out).trim().to_string())),
        Err(_) => {
            let any = run_git(repo, &["rev-list", "-n", "1", "--all"]).unwrap_or_default();
            if any.iter().all(u8::is_ascii_whitespace) {
                Ok(None)
            } else {
                Err(Error::UnresolvableRef(rev.to_string()))
            }
        }
    }
}

/// Undoes git's C-style quoting of unusual paths.
fn unquote(path: &str) -> String {
    let Some(inner) = path.strip_prefix('"').and_then(|p| p.strip_suffix('"')) else {
        return path.to_string();
    };
    let mut bytes = Vec::new();
    let mut it = inner.bytes().peekable();
    while let Some(b) = it.next() {
        if b != b'\\' {
            bytes.push(b);
            continue;
        }
        match it.next() {
            Some(b'n') => bytes.push(b'\n'),
            Some(b't') => bytes.push(b'\t'),
            Some(d @ b'0'..=b'7') => {
                let mut v = (d - b'0') as u32;
                for _ in 0..2 {
                    if let Some(&n @ b'0'..=b'7') = it.peek() {
                        v = v * 8 + (n - b'0') as u32;
                        it.next();
                    }
                }
                bytes.push(v as u8);
            }
            Some(other) => bytes.push(other),
            None => {}
        }
    }
    String::from_utf8_lossy(&bytes).into_owned()
}

/// `@@ -a[,b] +c[,d] @@` as ((a, b), (c, d)).
fn parse_hunk(line: &str) -> Option<((u32, u32), (u32, u32))> {
    let body = line.strip_prefix("@@ ")?;
    let end = body.find(" @@")?;
    let mut parts = body[..end].split(' ');
    let range = |s: &str, sign: char| -> Option<(u32, u32)> {
        let s = s.strip_prefix(sign)?;
        match s.split_once(',') {
            Some((a, b)) => Some((a.parse().ok()?, b.parse().ok()?)),
            None => Some((s.parse().ok()?, 1)),
        }
    };
    let old = range(parts.next()?, '-')?;
    let new = range(parts.next()?, '+')?;
    Some((old, new))
}

struct RawEntry {
    path: String,
    old: String,
    new: String,
}

/// Splits one commit's `--raw -p` output into raw entries and per-file hunk
/// statistics.
fn parse_changes(text: &str) -> (Vec<RawEntry>, HashMap<String, FileChange>) {
    let mut raw = Vec::new();
    let mut stats: HashMap<String, FileChange> = HashMap::new();
    let mut minus_path: Option<String> = None;
    let mut current: Option<String> = None;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix(':') {
            let Some((meta, path)) = rest.split_once('\t') else {
                continue;
            };
            let f: Vec<&str> = meta.split(' ').collect();
            if f.len() >= 4 {
                raw.push(RawEntry {
                    path: unquote(path),
                    old: f[2].to_string(),
                    new: f[3].to_string(),
                });
            }
        } else if line.starts_with("diff --git ") {
            minus_path = None;
            current = None;
        } else if let Some(p) = line.strip_prefix("--- ") {
            minus_path = p.strip_prefix("a/").map(str::to_owned).or_else(|| {
                let u = unquote(p);
                u.strip_prefix("a/").map(str::to_owned)
            });
        } else if let Some(p) = line.strip_prefix("+++ ") {
            let plus = if p == "/dev/null" {
                None
            } else {
                let u = unquote(p);
                u.strip_prefix("b/").map(str::to_owned)
            };
            current = plus.or_else(|| minus_path.clone().map(|m| unquote(&m)));
        } else if line.starts_with("@@ ") {
            let (Some(path), Some(((a, b), (c, d)))) = (&current, parse_hunk(line)) else {
                if current.is_some() {
                    log::warn!("unparseable hunk header: {line}");
                }
                continue;
            };
            let fc = stats.entry(path.clone()).or_insert_with(|| FileChange {
                path: path.clone(),
                ..Default::default()
            });
            if d > 0 {
                fc.lines_added += d;
                fc.added_chunks.push(c.max(1));
            }
            if b > 0 {
                fc.lines_deleted += b;
                fc.deleted_chunks.push(a.max(1));
            }
        }
    }
    (raw, stats)
}

/// Commits reachable from `until`, parents first, each diffed against its
/// first parent. Renames are recorded as delete plus add.
pub fn ingest_git_history(repo: &Path, until: &str) -> Result<Vec<Commit>> {
    let Some(head) = resolve_ref(repo, until)? else {
        return Ok(Vec::new());
    };
    let out = run_git(
        repo,
        &[
            "log",
            "--topo-order",
            "--reverse",
            "--no-renames",
            "--no-abbrev",
            "--no-color",
            "--no-ext-diff",
            "--raw",
            "-p",
            "-U0",
            "--diff-merges=first-parent",
            "--format=%x01%H%x00%at%x00%an%x00%B%x00",
            &head,
        ],
    )?;
    let text = String::from_utf8_lossy(&out);
    let analyzers = AnalyzerTable::default();
    let mut cat = CatFile::spawn(repo)?;
    let mut units: HashMap<String, Vec<UnitInfo>> = HashMap::new();
    let mut commits = Vec::new();
    for block in text.split('\u{1}').filter(|b| !b.is_empty()) {
        let mut fields = block.splitn(5, '\0');
        let (Some(hash), Some(ts), Some(author), Some(message)) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(Error::Git("unexpected log format".into()));
        };
        let rest = fields.next().unwrap_or("");
        let (raw, mut stats) = parse_changes(rest);
        let mut file_changes = Vec::with_capacity(raw.len());
        for entry in raw {
            let mut fc = stats.remove(&entry.path).unwrap_or_else(|| FileChange {
                path: entry.path.clone(),
                ..Default::default()
            });
            if analyzers.accepts(&entry.path) {
                let mut load = |oid: &str| -> Result<Vec<UnitInfo>> {
                    if oid == NULL_OID || oid.chars().all(|c| c == '0') {
                        return Ok(Vec::new());
                    }
                    if let Some(u) = units.get(oid) {
                        return Ok(u.clone());
                    }
                    let text = String::from_utf8_lossy(&cat.read(oid)?).into_owned();
                    let u = parse_java(&text).units;
                    units.insert(oid.to_string(), u.clone());
                    Ok(u)
                };
                let before = load(&entry.old)?;
                let after = load(&entry.new)?;
                fc.risk = Some(risk_delta(&before, &after));
            }
            file_changes.push(fc);
        }
        commits.push(Commit {
            id: CommitId(hash.trim().to_string()),
            timestamp: ts.trim().parse().unwrap_or(0),
            author: author.to_string(),
            message: message.trim_end().to_string(),
            file_changes,
        });
    }
    Ok(commits)
}

/// A long-running `git cat-file --batch` process.
pub struct CatFile {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl CatFile {
    pub fn spawn(repo: &Path) -> Result<Self> {
        let mut child = Command::new("git")
            .arg("-C")
            .arg(repo)
            .args(["cat-file", "--batch"])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| Error::Git(format!("cannot run git cat-file: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(CatFile { child, stdin, stdout })
    }

    pub fn read(&mut self, oid: &str) -> Result<Vec<u8>> {
        writeln!(self.stdin, "{oid}")?;
        self.stdin.flush()?;
        let mut header = String::new();
        self.stdout.read_line(&mut header)?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::Git(format!("object {oid}: {}", header.trim())));
        }
        let size: usize = parts[2]
            .parse()
            .map_err(|_| Error::Git(format!("bad cat-file header {header:?}")))?;
        let mut buf = vec![0; size + 1];
        self.stdout.read_exact(&mut buf)?;
        buf.pop();
        Ok(buf)
    }
}

impl Drop for CatFile {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Sources read from the committed trees of a git repository.
pub struct GitSource {
    repo: PathBuf,
    cat: Mutex<Option<CatFile>>,
}

impl GitSource {
    pub fn open(repo: &Path) -> Result<Self> {
        check_repo(repo)?;
        Ok(GitSource {
            repo: repo.to_path_buf(),
            cat: Mutex::new(None),
        })
    }
}

impl SourceStore for GitSource {
    fn list(&self, commit: Option<&CommitId>) -> Result<Vec<SourceFile>> {
        let Some(commit) = commit else {
            return Ok(Vec::new());
        };
        let out = run_git(&self.repo, &["ls-tree", "-r", "-z", "--full-tree", &commit.0])?;
        let mut files = Vec::new();
        for entry in out.split(|&b| b == 0).filter(|e| !e.is_empty()) {
            let entry = String::from_utf8_lossy(entry);
            let Some((meta, path)) = entry.split_once('\t') else {
                continue;
            };
            let meta: Vec<&str> = meta.split(' ').collect();
            if meta.len() == 3 && meta[1] == "blob" {
                files.push(SourceFile {
                    path: path.to_string(),
                    id: meta[2].to_string(),
                });
            }
        }
        Ok(files)
    }

    fn read(&self, files: &[SourceFile]) -> Result<Vec<String>> {
        let mut guard = self.cat.lock().unwrap_or_else(|e| e.into_inner());
        if guard.is_none() {
            *guard = Some(CatFile::spawn(&self.repo)?);
        }
        let cat = guard.as_mut().unwrap();
        files
            .iter()
            .map(|f| Ok(String::from_utf8_lossy(&cat.read(&f.id)?).into_owned()))
            .collect()
    }
}
