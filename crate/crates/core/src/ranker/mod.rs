//! Learned and heuristic test rankers.
//!
//! [`RankingModel`] is a bagged ensemble of boosted regression trees trained
//! pointwise on binary relevance (failed = 1). Scores are sorted descending;
//! equal scores fall back to the cheaper test by `F_AvgExeTime_Total`, then to
//! the test path.

mod ensemble;
mod heuristic;
pub mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use ensemble::{Bag, Ensemble, Hyperparams};
pub use heuristic::{heuristic_rank, parse_heuristic, Direction, HeuristicSpec};

use crate::catalog::FeatureCatalog;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::model::{BuildId, TestId};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedTest {
    pub test: TestId,
    pub score: f64,
}

/// A permutation of one build's tests, best first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestOrdering {
    pub build: BuildId,
    pub ranked: Vec<RankedTest>,
}

impl TestOrdering {
    pub fn tests(&self) -> Vec<TestId> {
        self.ranked.iter().map(|r| r.test.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.ranked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked.is_empty()
    }
}

/// Training rows of one build: its feature matrix and per-row relevance.
#[derive(Clone, Debug)]
pub struct LabeledMatrix {
    pub matrix: FeatureMatrix,
    pub labels: Vec<f64>,
}

impl LabeledMatrix {
    /// Labels each row 1.0 if the test failed in `failed`, else 0.0.
    pub fn from_failures(
        matrix: FeatureMatrix,
        failed: &std::collections::BTreeSet<TestId>,
    ) -> Self {
        let labels = matrix
            .rows
            .iter()
            .map(|r| if failed.contains(&r.test) { 1.0 } else { 0.0 })
            .collect();
        LabeledMatrix { matrix, labels }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingModel {
    pub format_version: u32,
    pub hyperparams: Hyperparams,
    pub catalog_fingerprint: String,
    pub feature_names: Vec<String>,
    pub trained_at: BuildId,
    pub training_rows: usize,
    pub feature_usage: Vec<u64>,
    pub ensemble: Ensemble,
}

impl RankingModel {
    /// Trains on the rows of prior failed builds.
    pub fn train(
        examples: &[LabeledMatrix],
        catalog: &FeatureCatalog,
        hp: &Hyperparams,
        trained_at: BuildId,
    ) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::NoFailedBuilds);
        }
        let width = catalog.len();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for ex in examples {
            if ex.matrix.catalog.fingerprint() != catalog.fingerprint() {
                return Err(Error::CatalogMismatch {
                    model: catalog.fingerprint().to_string(),
                    matrix: ex.matrix.catalog.fingerprint().to_string(),
                });
            }
            if ex.labels.len() != ex.matrix.rows.len() {
                return Err(Error::Invariant("label count differs from row count".into()));
            }
            for row in &ex.matrix.rows {
                x.extend_from_slice(&row.values);
            }
            y.extend_from_slice(&ex.labels);
        }
        if y.is_empty() {
            return Err(Error::NoFailedBuilds);
        }
        if y.iter().all(|&v| v == y[0]) {
            log::warn!("training labels are all {}; model is constant", y[0]);
        }
        let ensemble = Ensemble::fit(&x, width, &y, hp)?;
        Ok(RankingModel {
            format_version: MODEL_FORMAT_VERSION,
            hyperparams: hp.clone(),
            catalog_fingerprint: catalog.fingerprint().to_string(),
            feature_names: catalog.names().map(str::to_owned).collect(),
            trained_at,
            training_rows: y.len(),
            feature_usage: ensemble.feature_usage(),
            ensemble,
        })
    }

    pub fn score(&self, values: &[f64]) -> f64 {
        self.ensemble.predict(values)
    }

    /// Ranks the matrix rows by descending score.
    pub fn predict(&self, matrix: &FeatureMatrix) -> Result<TestOrdering> {
        if matrix.catalog.fingerprint() != self.catalog_fingerprint {
            return Err(Error::CatalogMismatch {
                model: self.catalog_fingerprint.clone(),
                matrix: matrix.catalog.fingerprint().to_string(),
            });
        }
        let scores: Vec<f64> = matrix.rows.iter().map(|r| self.score(&r.values)).collect();
        order_by_scores(matrix, &scores)
    }

    /// (feature name, split count), highest count first.
    pub fn feature_usage(&self) -> Vec<(String, u64)> {
        let mut table: Vec<(String, u64)> = self
            .feature_names
            .iter()
            .cloned()
            .zip(self.feature_usage.iter().copied())
            .collect();
        table.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        table
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: RankingModel = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::FormatVersion(model.format_version));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        RankingModel::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Sorts rows by score descending, then by average execution time ascending,
/// then by test path.
pub fn order_by_scores(matrix: &FeatureMatrix, scores: &[f64]) -> Result<TestOrdering> {
    let time_col = matrix.catalog.index_of("F_AvgExeTime_Total")?;
    let mut idx: Vec<usize> = (0..matrix.rows.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| {
                matrix.rows[a].values[time_col].total_cmp(&matrix.rows[b].values[time_col])
            })
            .then_with(|| matrix.rows[a].test.cmp(&matrix.rows[b].test))
    });
    Ok(TestOrdering {
        build: matrix.build,
        ranked: idx
            .into_iter()
            .map(|i| RankedTest {
                test: matrix.rows[i].test.clone(),
                score: scores[i],
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureVector;

    fn matrix(times: &[f64]) -> FeatureMatrix {
        let catalog = FeatureCatalog::standard();
        let col = catalog.index_of("F_AvgExeTime_Total").unwrap();
        let rows = times
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let mut values = vec![0.0; catalog.len()];
                values[col] = t;
                FeatureVector {
                    build: BuildId(1),
                    test: TestId::new(format!("T{i}.java")).unwrap(),
                    values,
                }
            })
            .collect();
        FeatureMatrix {
            build: BuildId(1),
            catalog,
            rows,
        }
    }

    #[test]
    fn equal_scores_prefer_cheaper_test() {
        let m = matrix(&[5000.0, 2000.0]);
        let o = order_by_scores(&m, &[0.4, 0.4]).unwrap();
        assert_eq!(o.ranked[0].test.as_str(), "T1.java");
    }

    #[test]
    fn single_test_is_first() {
        let m = matrix(&[1.0]);
        let o = order_by_scores(&m, &[0.0]).unwrap();
        assert_eq!(o.len(), 1);
    }

    #[test]
    fn catalog_mismatch_detected() {
        let m = matrix(&[1.0, 2.0]);
        let ex = LabeledMatrix {
            labels: vec![1.0, 0.0],
            matrix: m.clone(),
        };
        let hp = Hyperparams {
            bags: 2,
            ..Hyperparams::default()
        };
        let mut model =
            RankingModel::train(&[ex], &FeatureCatalog::standard(), &hp, BuildId(2)).unwrap();
        model.catalog_fingerprint = "other".into();
        assert!(matches!(model.predict(&m), Err(Error::CatalogMismatch { .. })));
    }

    #[test]
    fn no_examples_is_an_error() {
        let hp = Hyperparams::default();
        assert!(matches!(
            RankingModel::train(&[], &FeatureCatalog::standard(), &hp, BuildId(1)),
            Err(Error::NoFailedBuilds)
        ));
    }

    #[test]
    fn json_round_trip() {
        let m = matrix(&[1.0, 2.0, 3.0]);
        let ex = LabeledMatrix {
            labels: vec![1.0, 0.0, 0.0],
            matrix: m,
        };
        let hp = Hyperparams {
            bags: 3,
            ..Hyperparams::default()
        };
        let model =
            RankingModel::train(&[ex], &FeatureCatalog::standard(), &hp, BuildId(2)).unwrap();
        let back = RankingModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(model, back);
    }
}
