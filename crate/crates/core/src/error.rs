use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("repository not found: {0}")]
    RepoNotFound(PathBuf),
    #[error("cannot resolve revision `{0}`")]
    UnresolvableRef(String),
    #[error("git failed: {0}")]
    Git(String),
    #[error("schema error in {file} at row {row}: {message}")]
    Schema {
        file: String,
        row: usize,
        message: String,
    },
    #[error("duplicate record: build {build}, job {job}, test {test}")]
    DuplicateRecord {
        build: u64,
        job: String,
        test: String,
    },
    #[error("build has no jobs")]
    EmptyBuild,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("corpus contains a single class")]
    DegenerateCorpus,
    #[error("unknown test: {0}")]
    UnknownTest(String),
    #[error("unknown feature: {0}")]
    UnknownFeature(String),
    #[error("no failed builds available for training")]
    NoFailedBuilds,
    #[error("feature catalog mismatch: model {model}, matrix {matrix}")]
    CatalogMismatch { model: String, matrix: String },
    #[error("insufficient history: {0}")]
    InsufficientHistory(String),
    #[error("build has no failures; APFD_C is undefined")]
    NoFailures,
    #[error("unknown build: {0}")]
    UnknownBuild(u64),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("unsupported format version {0}")]
    FormatVersion(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn schema(file: impl Into<String>, row: usize, message: impl Into<String>) -> Self {
        Error::Schema {
            file: file.into(),
            row,
            message: message.into(),
        }
    }

    /// Short machine-readable tag used on the CLI `error:` line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::RepoNotFound(_) => "repo-not-found",
            Error::UnresolvableRef(_) => "unresolvable-ref",
            Error::Git(_) => "git",
            Error::Schema { .. } => "schema",
            Error::DuplicateRecord { .. } => "duplicate-record",
            Error::EmptyBuild => "empty-build",
            Error::InvalidConfig(_) => "invalid-config",
            Error::DegenerateCorpus => "degenerate-corpus",
            Error::UnknownTest(_) => "unknown-test",
            Error::UnknownFeature(_) => "unknown-feature",
            Error::NoFailedBuilds => "no-failed-builds",
            Error::CatalogMismatch { .. } => "catalog-mismatch",
            Error::InsufficientHistory(_) => "insufficient-history",
            Error::NoFailures => "no-failures",
            Error::UnknownBuild(_) => "unknown-build",
            Error::Invariant(_) => "invariant",
            Error::FormatVersion(_) => "format-version",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    /// Process exit code: 2 input/schema, 3 insufficient history, 4 internal invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NoFailedBuilds | Error::InsufficientHistory(_) | Error::NoFailures => 3,
            Error::Invariant(_) => 4,
            _ => 2,
        }
    }
}
