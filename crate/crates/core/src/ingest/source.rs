use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::model::CommitId;

/// A file of a snapshot and an id that changes whenever its content does.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SourceFile {
    pub path: String,
    pub id: String,
}

/// Read access to the source files of the repository at a commit.
pub trait SourceStore {
    fn list(&self, commit: Option<&CommitId>) -> Result<Vec<SourceFile>>;
    fn read(&self, files: &[SourceFile]) -> Result<Vec<String>>;
}

/// No sources at all. Every file-derived feature falls back to defaults.
pub struct EmptySource;

impl SourceStore for EmptySource {
    fn list(&self, _: Option<&CommitId>) -> Result<Vec<SourceFile>> {
        Ok(Vec::new())
    }

    fn read(&self, files: &[SourceFile]) -> Result<Vec<String>> {
        Ok(vec![String::new(); files.len()])
    }
}

/// One fixed directory tree used as the snapshot of every commit.
pub struct DirSource {
    root: PathBuf,
}

impl DirSource {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DirSource { root: root.into() }
    }
}

fn walk(root: &Path, dir: &Path, out: &mut Vec<SourceFile>) -> Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if entry.file_type()?.is_dir() {
            walk(root, &path, out)?;
        } else if let Ok(rel) = path.strip_prefix(root) {
            let rel = rel.to_string_lossy().replace('\\', "/");
            out.push(SourceFile {
                id: format!("tree:{rel}"),
                path: rel,
            });
        }
    }
    Ok(())
}

impl SourceStore for DirSource {
    fn list(&self, _: Option<&CommitId>) -> Result<Vec<SourceFile>> {
        let mut files = Vec::new();
        walk(&self.root, &self.root, &mut files)?;
        files.sort();
        Ok(files)
    }

    fn read(&self, files: &[SourceFile]) -> Result<Vec<String>> {
        files
            .iter()
            .map(|f| {
                let bytes = std::fs::read(self.root.join(&f.path))?;
                Ok(String::from_utf8_lossy(&bytes).into_owned())
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directory_listing_is_sorted_and_relative() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join("p/q")).unwrap();
        std::fs::write(dir.path().join("p/q/B.java"), "class B {}").unwrap();
        std::fs::write(dir.path().join("A.java"), "class A {}").unwrap();
        let src = DirSource::new(dir.path());
        let files = src.list(None).unwrap();
        let paths: Vec<&str> = files.iter().map(|f| f.path.as_str()).collect();
        assert_eq!(paths, vec!["A.java", "p/q/B.java"]);
        assert_eq!(src.read(&files[1..]).unwrap(), vec!["class B {}"]);
    }
}
