//! Static metrics of source files and history-derived process and change
//! metrics.

mod change;
mod java;
mod process;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

pub use change::{change_scattering, compute_change_metrics, risk_delta, ChangeMetrics, DMM_UNDEFINED};
pub use java::{parse_java, ParsedFile, UnitInfo};
pub use process::{compute_process_metrics, ProcessIndex, ProcessMetrics};

use crate::catalog::COMPLEXITY_METRICS;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ComplexityMetrics {
    pub count_decl_function: u32,
    pub count_line: u32,
    pub count_line_blank: u32,
    pub count_line_code: u32,
    pub count_line_code_decl: u32,
    pub count_line_code_exe: u32,
    pub count_line_comment: u32,
    pub count_stmt: u32,
    pub count_stmt_decl: u32,
    pub count_stmt_exe: u32,
    pub ratio_comment_to_code: f64,
    pub max_cyclomatic: u32,
    pub max_cyclomatic_modified: u32,
    pub max_cyclomatic_strict: u32,
    pub max_essential: u32,
    pub max_nesting: u32,
    pub sum_cyclomatic: u32,
    pub sum_cyclomatic_modified: u32,
    pub sum_cyclomatic_strict: u32,
    pub sum_essential: u32,
    pub count_decl_class: u32,
    pub count_decl_class_method: u32,
    pub count_decl_class_variable: u32,
    pub count_decl_executable_unit: u32,
    pub count_decl_instance_method: u32,
    pub count_decl_instance_variable: u32,
    pub count_decl_method: u32,
    pub count_decl_method_default: u32,
    pub count_decl_method_private: u32,
    pub count_decl_method_protected: u32,
    pub count_decl_method_public: u32,
}

impl ComplexityMetrics {
    /// Values in [`COMPLEXITY_METRICS`] order.
    pub fn values(&self) -> [f64; COMPLEXITY_METRICS.len()] {
        let c = |v: u32| v as f64;
        [
            c(self.count_decl_function),
            c(self.count_line),
            c(self.count_line_blank),
            c(self.count_line_code),
            c(self.count_line_code_decl),
            c(self.count_line_code_exe),
            c(self.count_line_comment),
            c(self.count_stmt),
            c(self.count_stmt_decl),
            c(self.count_stmt_exe),
            self.ratio_comment_to_code,
            c(self.max_cyclomatic),
            c(self.max_cyclomatic_modified),
            c(self.max_cyclomatic_strict),
            c(self.max_essential),
            c(self.max_nesting),
            c(self.sum_cyclomatic),
            c(self.sum_cyclomatic_modified),
            c(self.sum_cyclomatic_strict),
            c(self.sum_essential),
            c(self.count_decl_class),
            c(self.count_decl_class_method),
            c(self.count_decl_class_variable),
            c(self.count_decl_executable_unit),
            c(self.count_decl_instance_method),
            c(self.count_decl_instance_variable),
            c(self.count_decl_method),
            c(self.count_decl_method_default),
            c(self.count_decl_method_private),
            c(self.count_decl_method_protected),
            c(self.count_decl_method_public),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityKind {
    TestFile,
    SutFile,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceEntity {
    pub path: String,
    pub kind: EntityKind,
    pub import_targets: BTreeSet<String>,
    pub call_targets: BTreeSet<String>,
}

/// A file is a test if a directory is named `test` or its name matches
/// `*Test.java` / `Test*.java`.
pub fn is_test_path(path: &str) -> bool {
    let mut parts: Vec<&str> = path.split('/').collect();
    let name = parts.pop().unwrap_or("");
    if parts.contains(&"test") {
        return true;
    }
    let stem = name.strip_suffix(".java").unwrap_or("");
    !stem.is_empty() && (stem.ends_with("Test") || stem.starts_with("Test"))
}

/// File-name lookups over a snapshot's analyzable files, used to resolve
/// imports and type references to paths.
#[derive(Clone, Debug, Default)]
pub struct RepoIndex {
    by_stem: HashMap<String, Vec<String>>,
}

fn stem_of(path: &str) -> &str {
    let name = path.rsplit('/').next().unwrap_or(path);
    name.rsplit_once('.').map_or(name, |(s, _)| s)
}

impl RepoIndex {
    pub fn new<'a>(paths: impl IntoIterator<Item = &'a str>) -> Self {
        let mut by_stem: HashMap<String, Vec<String>> = HashMap::new();
        for p in paths {
            by_stem.entry(stem_of(p).to_string()).or_default().push(p.to_string());
        }
        for v in by_stem.values_mut() {
            v.sort();
            v.dedup();
        }
        RepoIndex { by_stem }
    }

    /// Resolves `a.b.C` to the file ending in `a/b/C.<ext>`; `a.b.*` to every
    /// file directly in a directory ending in `a/b`.
    fn resolve_import(&self, import: &str, out: &mut BTreeSet<String>) {
        let parts: Vec<&str> = import.split('.').collect();
        if parts.last() == Some(&"*") {
            let dir = parts[..parts.len() - 1].join("/");
            for paths in self.by_stem.values() {
                for p in paths {
                    let parent = p.rsplit_once('/').map_or("", |(d, _)| d);
                    if parent == dir || parent.ends_with(&format!("/{dir}")) {
                        out.insert(p.clone());
                    }
                }
            }
            return;
        }
        // try the full name, then drop trailing members (static imports)
        for end in (1..=parts.len()).rev() {
            let stem = parts[end - 1];
            let Some(candidates) = self.by_stem.get(stem) else {
                continue;
            };
            let suffix = parts[..end].join("/");
            let hits: Vec<&String> = candidates
                .iter()
                .filter(|p| {
                    let no_ext = p.rsplit_once('.').map_or(p.as_str(), |(s, _)| s);
                    no_ext == suffix || no_ext.ends_with(&format!("/{suffix}"))
                })
                .collect();
            if !hits.is_empty() {
                out.extend(hits.into_iter().cloned());
                return;
            }
        }
    }

    /// A type name resolves only when exactly one file has that stem.
    fn resolve_type(&self, name: &str) -> Option<&str> {
        match self.by_stem.get(name).map(Vec::as_slice) {
            Some([only]) => Some(only.as_str()),
            _ => None,
        }
    }
}

/// Resolves a parsed file's imports and type references against the index.
pub fn resolve_entity(path: &str, parsed: &ParsedFile, index: &RepoIndex) -> SourceEntity {
    let mut import_targets = BTreeSet::new();
    for import in &parsed.imports {
        index.resolve_import(import, &mut import_targets);
    }
    import_targets.remove(path);
    let call_targets = parsed
        .referenced_types
        .iter()
        .filter_map(|t| index.resolve_type(t))
        .filter(|p| *p != path && !import_targets.contains(*p))
        .map(str::to_owned)
        .collect();
    SourceEntity {
        path: path.to_string(),
        kind: if is_test_path(path) {
            EntityKind::TestFile
        } else {
            EntityKind::SutFile
        },
        import_targets,
        call_targets,
    }
}

/// Metrics and dependency entity of one file.
pub fn analyze_file(source: &str, path: &str, index: &RepoIndex) -> (ComplexityMetrics, SourceEntity) {
    let parsed = parse_java(source);
    let entity = resolve_entity(path, &parsed, index);
    (parsed.metrics, entity)
}

/// Which file extensions are analyzed. Only `.java` by default.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzerTable {
    pub extensions: Vec<String>,
}

impl Default for AnalyzerTable {
    fn default() -> Self {
        AnalyzerTable {
            extensions: vec!["java".into()],
        }
    }
}

impl AnalyzerTable {
    pub fn accepts(&self, path: &str) -> bool {
        path.rsplit_once('.')
            .is_some_and(|(_, ext)| self.extensions.iter().any(|e| e == ext))
    }
}
