use std::collections::HashMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::analysis::{
    parse_java, resolve_entity, AnalyzerTable, ComplexityMetrics, ParsedFile, ProcessIndex,
    ProcessMetrics, RepoIndex,
};
use crate::classifier::{CommitClass, MessageClassifier};
use crate::coverage::{build_with_index, CoChangeIndex, DependencyGraph, PdfTable};
use crate::error::Result;
use crate::ingest::{SourceFile, SourceStore};
use crate::model::{Build, BuildId, CommitId, CommitLog};

/// Wall-clock cost of each preprocessing step behind one snapshot.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PrepTiming {
    pub analysis: Duration,
    pub graph: Duration,
    pub process: Duration,
    pub pdf: Duration,
}

/// Preprocessed repository state as of one build: static metrics, the
/// dependency graph, process metrics and PDF counts.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub build: BuildId,
    pub commit: Option<CommitId>,
    pub metrics: HashMap<String, ComplexityMetrics>,
    pub process: HashMap<String, ProcessMetrics>,
    pub graph: DependencyGraph,
    pub pdf: PdfTable,
    pub timing: PrepTiming,
}

/// Walks the commit log forward and produces snapshots for builds in
/// history order. Parsed files are cached by content id.
pub struct Preprocessor<'a> {
    commits: &'a CommitLog,
    source: &'a dyn SourceStore,
    classifier: &'a dyn MessageClassifier,
    analyzers: AnalyzerTable,
    consumed: usize,
    head: Option<usize>,
    process: ProcessIndex,
    cochange: CoChangeIndex,
    pdf: PdfTable,
    cache: HashMap<String, Arc<ParsedFile>>,
    pending: PrepTiming,
}

impl<'a> Preprocessor<'a> {
    pub fn new(
        commits: &'a CommitLog,
        source: &'a dyn SourceStore,
        classifier: &'a dyn MessageClassifier,
        analyzers: AnalyzerTable,
    ) -> Self {
        Preprocessor {
            commits,
            source,
            classifier,
            analyzers,
            consumed: 0,
            head: None,
            process: ProcessIndex::new(),
            cochange: CoChangeIndex::default(),
            pdf: PdfTable::new(),
            cache: HashMap::new(),
            pending: PrepTiming::default(),
        }
    }

    /// Consumes commits up to and including the latest one listed by `build`.
    /// Builds must be passed in history order.
    pub fn advance(&mut self, build: &Build) {
        let target = build
            .change_set
            .commits
            .iter()
            .filter_map(|c| self.commits.position(c))
            .max();
        let Some(target) = target else {
            return;
        };
        while self.consumed <= target {
            let commit = &self.commits.commits()[self.consumed];
            let t = Instant::now();
            self.process.add_commit(commit);
            self.pending.process += t.elapsed();
            let t = Instant::now();
            self.cochange.add_commit(commit);
            self.pending.graph += t.elapsed();
            let t = Instant::now();
            if self.classifier.classify(&commit.message) == CommitClass::DefectFix {
                for path in commit.changed_paths() {
                    *self.pdf.entry(path.to_string()).or_insert(0) += 1;
                }
            }
            self.pending.pdf += t.elapsed();
            self.consumed += 1;
        }
        self.head = Some(target);
    }

    fn parse_all(&mut self, files: &[SourceFile]) -> Result<()> {
        let missing: Vec<SourceFile> = files
            .iter()
            .filter(|f| !self.cache.contains_key(&f.id))
            .cloned()
            .collect();
        if missing.is_empty() {
            return Ok(());
        }
        let texts = self.source.read(&missing)?;
        let parsed: Vec<ParsedFile> = texts.par_iter().map(|t| parse_java(t)).collect();
        for (f, p) in missing.into_iter().zip(parsed) {
            self.cache.insert(f.id, Arc::new(p));
        }
        Ok(())
    }

    /// Snapshot as of `build`, after advancing to it.
    pub fn snapshot(&mut self, build: &Build) -> Result<Snapshot> {
        self.advance(build);
        let commit = self.head.map(|i| self.commits.commits()[i].id.clone());
        let mut timing = std::mem::take(&mut self.pending);

        let t = Instant::now();
        let files: Vec<SourceFile> = self
            .source
            .list(commit.as_ref())?
            .into_iter()
            .filter(|f| self.analyzers.accepts(&f.path))
            .collect();
        self.parse_all(&files)?;
        let metrics: HashMap<String, ComplexityMetrics> = files
            .iter()
            .map(|f| (f.path.clone(), self.cache[&f.id].metrics.clone()))
            .collect();
        timing.analysis += t.elapsed();

        let t = Instant::now();
        let index = RepoIndex::new(files.iter().map(|f| f.path.as_str()));
        let entities: Vec<_> = files
            .iter()
            .map(|f| resolve_entity(&f.path, &self.cache[&f.id], &index))
            .collect();
        let graph = build_with_index(&entities, &self.cochange, Some(build.id));
        timing.graph += t.elapsed();

        let t = Instant::now();
        let process = files
            .iter()
            .map(|f| (f.path.clone(), self.process.metrics(&f.path)))
            .collect();
        timing.process += t.elapsed();

        let t = Instant::now();
        let pdf = self.pdf.clone();
        timing.pdf += t.elapsed();

        Ok(Snapshot {
            build: build.id,
            commit,
            metrics,
            process,
            graph,
            pdf,
            timing,
        })
    }
}
