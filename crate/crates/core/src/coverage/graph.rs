use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::association::{scores_from_counts, CoChangeIndex};
use crate::analysis::{EntityKind, SourceEntity};
use crate::error::{Error, Result};
use crate::model::{AssociationScores, BuildId, Commit, TestId};

/// Co-change statistics attached to a dependency edge `from -> to`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EdgeStats {
    pub pair_count: u64,
    pub from_count: u64,
    pub to_count: u64,
    pub scores: AssociationScores,
}

/// File-level dependency graph. An edge `a -> b` means `a` imports or calls
/// into `b`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DependencyGraph {
    pub built_at: Option<BuildId>,
    nodes: BTreeMap<String, EntityKind>,
    out: BTreeMap<String, BTreeMap<String, EdgeStats>>,
    incoming: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Serialize)]
struct EdgeExport<'a> {
    from: &'a str,
    to: &'a str,
    support: f64,
    confidence: f64,
    lift: f64,
}

#[derive(Serialize)]
struct GraphExport<'a> {
    built_at: Option<BuildId>,
    nodes: Vec<&'a str>,
    edges: Vec<EdgeExport<'a>>,
}

impl DependencyGraph {
    pub fn new(built_at: Option<BuildId>) -> Self {
        DependencyGraph {
            built_at,
            ..Default::default()
        }
    }

    pub fn add_node(&mut self, path: &str, kind: EntityKind) {
        self.nodes.insert(path.to_string(), kind);
    }

    /// Adds an edge between two existing nodes. Self edges and dangling
    /// endpoints are ignored.
    pub fn add_edge(&mut self, from: &str, to: &str, stats: EdgeStats) -> bool {
        if from == to || !self.nodes.contains_key(from) || !self.nodes.contains_key(to) {
            return false;
        }
        self.out
            .entry(from.to_string())
            .or_default()
            .insert(to.to_string(), stats);
        self.incoming
            .entry(to.to_string())
            .or_default()
            .insert(from.to_string());
        true
    }

    pub fn contains(&self, path: &str) -> bool {
        self.nodes.contains_key(path)
    }

    pub fn kind(&self, path: &str) -> Option<EntityKind> {
        self.nodes.get(path).copied()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&str, EntityKind)> {
        self.nodes.iter().map(|(p, k)| (p.as_str(), *k))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out.values().map(BTreeMap::len).sum()
    }

    pub fn edge(&self, from: &str, to: &str) -> Option<&EdgeStats> {
        self.out.get(from).and_then(|m| m.get(to))
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, &EdgeStats)> {
        self.out.iter().flat_map(|(from, targets)| {
            targets
                .iter()
                .map(move |(to, s)| (from.as_str(), to.as_str(), s))
        })
    }

    pub fn out_neighbors(&self, path: &str) -> impl Iterator<Item = &str> {
        self.out
            .get(path)
            .into_iter()
            .flat_map(|m| m.keys().map(String::as_str))
    }

    pub fn in_neighbors(&self, path: &str) -> impl Iterator<Item = &str> {
        self.incoming
            .get(path)
            .into_iter()
            .flat_map(|s| s.iter().map(String::as_str))
    }

    /// Inspection export with `nodes` and `edges`.
    pub fn to_json(&self) -> Result<String> {
        let export = GraphExport {
            built_at: self.built_at,
            nodes: self.nodes.keys().map(String::as_str).collect(),
            edges: self
                .edges()
                .map(|(from, to, s)| EdgeExport {
                    from,
                    to,
                    support: s.scores.support,
                    confidence: s.scores.confidence,
                    lift: s.scores.lift,
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&export)?)
    }
}

/// Builds the graph of import and call edges, each annotated with the
/// association scores mined from `history`.
pub fn build_dependency_graph(
    entities: &[SourceEntity],
    history: &[Commit],
    as_of: Option<BuildId>,
) -> DependencyGraph {
    let index = CoChangeIndex::from_commits(history);
    build_with_index(entities, &index, as_of)
}

pub fn build_with_index(
    entities: &[SourceEntity],
    index: &CoChangeIndex,
    as_of: Option<BuildId>,
) -> DependencyGraph {
    let mut graph = DependencyGraph::new(as_of);
    for e in entities {
        graph.add_node(&e.path, e.kind);
    }
    let total = index.total() as u64;
    for e in entities {
        for target in e.import_targets.iter().chain(&e.call_targets) {
            if graph.edge(&e.path, target).is_some() {
                continue;
            }
            let pair = index.pair_count(&e.path, target);
            let from_count = index.count(&e.path);
            let to_count = index.count(target);
            let stats = EdgeStats {
                pair_count: pair,
                from_count,
                to_count,
                scores: scores_from_counts(pair, from_count, to_count, total),
            };
            graph.add_edge(&e.path, target, stats);
        }
    }
    graph
}

/// Files the test depends on directly, restricted to SUT files.
pub fn covered_files(graph: &DependencyGraph, test: &TestId) -> Result<BTreeSet<String>> {
    if !graph.contains(test.as_str()) {
        return Err(Error::UnknownTest(test.to_string()));
    }
    Ok(graph
        .out_neighbors(test.as_str())
        .filter(|f| graph.kind(f) == Some(EntityKind::SutFile))
        .map(str::to_owned)
        .collect())
}

/// confidence(f, t) when the test depends on `f`, else 0.
pub fn cov_score(graph: &DependencyGraph, f: &str, t: &TestId) -> f64 {
    match graph.edge(t.as_str(), f) {
        Some(s) if s.to_count > 0 => s.pair_count as f64 / s.to_count as f64,
        _ => 0.0,
    }
}

/// Files reaching a changed file over at most `depth` dependency edges,
/// excluding the changed files themselves.
pub fn impacted_files(
    graph: &DependencyGraph,
    changed: &BTreeSet<String>,
    depth: usize,
) -> BTreeSet<String> {
    let mut seen: BTreeSet<&str> = changed.iter().map(String::as_str).collect();
    let mut queue: VecDeque<(&str, usize)> = changed.iter().map(|f| (f.as_str(), 0)).collect();
    let mut impacted = BTreeSet::new();
    while let Some((f, d)) = queue.pop_front() {
        if d >= depth {
            continue;
        }
        for dependent in graph.in_neighbors(f) {
            if seen.insert(dependent) {
                impacted.insert(dependent.to_string());
                queue.push_back((dependent, d + 1));
            }
        }
    }
    impacted
}
