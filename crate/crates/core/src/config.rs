//! Run configuration shared by the command-line subcommands. Read from JSON;
//! command-line flags override the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::{CommitClassifier, KeywordClassifier, MessageClassifier};
use crate::error::{Error, Result};
use crate::evaluation::EvalOptions;
use crate::features::{FeatureOptions, RecWindow};
use crate::ranker::{parse_heuristic, Hyperparams};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierMode {
    /// Keyword matching on stemmed message tokens.
    #[default]
    Keywords,
    /// A classifier model file written by `CommitClassifier::to_json`.
    Trained(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub impact_depth: usize,
    pub recent_window: usize,
    pub hyperparams: Hyperparams,
    /// Seeds the ranker; replaces `hyperparams.seed`.
    pub seed: u64,
    pub max_eval_builds: usize,
    pub max_rw: usize,
    pub heuristic: String,
    pub remove_frequent_failers: bool,
    pub classifier: ClassifierMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        let eval = EvalOptions::default();
        RunConfig {
            dataset: None,
            impact_depth: eval.features.impact_depth,
            recent_window: eval.features.window.recent_size,
            hyperparams: eval.hyperparams,
            seed: 0,
            max_eval_builds: eval.max_eval_builds,
            max_rw: eval.max_rw,
            heuristic: eval.heuristic.to_string(),
            remove_frequent_failers: eval.remove_frequent_failers,
            classifier: ClassifierMode::Keywords,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    pub fn hyperparams(&self) -> Hyperparams {
        Hyperparams {
            seed: self.seed,
            ..self.hyperparams.clone()
        }
    }

    pub fn feature_options(&self) -> Result<FeatureOptions> {
        Ok(FeatureOptions {
            window: RecWindow::new(self.recent_window)?,
            impact_depth: self.impact_depth,
        })
    }

    pub fn eval_options(&self) -> Result<EvalOptions> {
        let hyperparams = self.hyperparams();
        hyperparams.validate()?;
        if self.max_eval_builds == 0 {
            return Err(Error::InvalidConfig("max_eval_builds must be positive".into()));
        }
        Ok(EvalOptions {
            features: self.feature_options()?,
            hyperparams,
            max_eval_builds: self.max_eval_builds,
            heuristic: parse_heuristic(&self.heuristic)?,
            remove_frequent_failers: self.remove_frequent_failers,
            max_rw: self.max_rw,
        })
    }

    pub fn classifier(&self) -> Result<Box<dyn MessageClassifier>> {
        Ok(match &self.classifier {
            ClassifierMode::Keywords => Box::new(KeywordClassifier),
            ClassifierMode::Trained(path) => {
                Box::new(CommitClassifier::from_json(&std::fs::read_to_string(path)?)?)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_files_fill_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"seed": 3, "classifier": {"trained": "clf.json"}}"#).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.hyperparams().seed, 3);
        assert_eq!(c.classifier, ClassifierMode::Trained("clf.json".into()));
        assert_eq!(c.max_eval_builds, 50);
        let opts = c.eval_options().unwrap();
        assert_eq!(opts.heuristic.to_string(), "F_FailRate_Total:desc");
        assert_eq!(opts.features.window.recent_size, 6);
    }

    #[test]
    fn round_trip_and_rejections() {
        let c = RunConfig::default();
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<RunConfig>(r#"{"sed": 1}"#).is_err());
        let bad = RunConfig { recent_window: 0, ..Default::default() };
        assert!(matches!(bad.eval_options(), Err(Error::InvalidConfig(_))));
    }
}
