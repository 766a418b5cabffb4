//! Test-case prioritization for continuous-integration histories.
//!
//! The crate mines a git repository and per-build test execution records,
//! computes a 150-column feature matrix per build, trains a bagged ensemble of
//! boosted regression trees, ranks the tests of each build, and evaluates
//! orderings with cost-cognizant APFD.
//!
//! The pipeline is split into small modules that can be used on their own:
//!
//! - [`model`]: domain types (builds, tests, verdicts, commits).
//! - [`ingest`]: git history, dataset CSV files, job deduplication, synthetic datasets.
//! - [`classifier`]: defect-fix commit message classification.
//! - [`analysis`]: static Java metrics, process metrics and change metrics.
//! - [`coverage`]: dependency graph, co-change association scores, PDF counts.
//! - [`features`]: the per-(build, test) feature vectors.
//! - [`ranker`]: tree ensembles and single-feature heuristics.
//! - [`evaluation`]: APFD_C, frequent-failer removal, pipeline and decay runs, timing.

pub mod analysis;
pub mod catalog;
pub mod classifier;
pub mod config;
pub mod coverage;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod ingest;
pub mod model;
pub mod ranker;

pub use catalog::{FeatureCatalog, FeatureGroup};
pub use error::{Error, Result};
pub use model::{
    is_failed, AssociationScores, Build, BuildHistory, BuildId, ChangeSet, Commit, CommitId,
    CommitLog, ExecutionRecord, FileChange, TestId, Verdict,
};
