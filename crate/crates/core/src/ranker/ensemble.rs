//! Bagged ensemble of squared-loss boosted regression trees.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, BinnedData, GrowParams, Tree};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub bags: usize,
    pub trees_per_bag: usize,
    pub max_leaves: usize,
    pub shrinkage: f64,
    pub sample_rate: f64,
    pub feature_rate: f64,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            bags: 150,
            trees_per_bag: 5,
            max_leaves: 200,
            shrinkage: 0.2,
            sample_rate: 0.5,
            feature_rate: 0.3,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let rate_ok = |r: f64| r > 0.0 && r <= 1.0;
        if self.bags == 0 || self.trees_per_bag == 0 || self.max_leaves == 0 {
            return Err(Error::InvalidConfig(
                "bags, trees_per_bag and max_leaves must be positive".into(),
            ));
        }
        if !(self.shrinkage > 0.0 && self.shrinkage.is_finite()) {
            return Err(Error::InvalidConfig("shrinkage must be positive".into()));
        }
        if !rate_ok(self.sample_rate) || !rate_ok(self.feature_rate) {
            return Err(Error::InvalidConfig("rates must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bag {
    pub init: f64,
    pub trees: Vec<Tree>,
}

impl Bag {
    fn predict(&self, row: &[f64], shrinkage: f64) -> f64 {
        self.init
            + self
                .trees
                .iter()
                .map(|t| shrinkage * t.predict(row))
                .sum::<f64>()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub n_features: usize,
    pub shrinkage: f64,
    pub bags: Vec<Bag>,
}

fn take(rng: &mut ChaCha8Rng, n: usize, rate: f64) -> Vec<usize> {
    let k = ((rate * n as f64).ceil() as usize).clamp(1, n);
    if k == n {
        return (0..n).collect();
    }
    let mut picked = sample(rng, n, k).into_vec();
    picked.sort_unstable();
    picked
}

impl Ensemble {
    /// Fits the ensemble on a row-major matrix `x` (`labels.len()` rows).
    pub fn fit(x: &[f64], n_features: usize, labels: &[f64], hp: &Hyperparams) -> Result<Self> {
        hp.validate()?;
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidConfig("no training rows".into()));
        }
        if x.len() != n * n_features {
            return Err(Error::Invariant("training matrix shape mismatch".into()));
        }
        let data = BinnedData::new(x, n, n_features);
        let params = GrowParams {
            max_leaves: hp.max_leaves,
            min_leaf: 1,
            lambda: 0.0,
        };
        let bags = (0..hp.bags)
            .into_par_iter()
            .map(|b| fit_bag(&data, x, n_features, labels, hp, params, b as u64))
            .collect();
        Ok(Ensemble {
            n_features,
            shrinkage: hp.shrinkage,
            bags,
        })
    }

    /// Mean over bags of each bag's boosted sum.
    pub fn predict(&self, row: &[f64]) -> f64 {
        if self.bags.is_empty() {
            return 0.0;
        }
        self.bags
            .iter()
            .map(|b| b.predict(row, self.shrinkage))
            .sum::<f64>()
            / self.bags.len() as f64
    }

    /// Split counts per feature column over every tree of every bag.
    pub fn feature_usage(&self) -> Vec<u64> {
        let mut usage = vec![0u64; self.n_features];
        for bag in &self.bags {
            for tree in &bag.trees {
                for f in tree.splits() {
                    usage[f] += 1;
                }
            }
        }
        usage
    }

    pub fn split_count(&self) -> usize {
        self.bags
            .iter()
            .flat_map(|b| &b.trees)
            .map(Tree::split_count)
            .sum()
    }
}

fn fit_bag(
    data: &BinnedData,
    x: &[f64],
    n_features: usize,
    labels: &[f64],
    hp: &Hyperparams,
    params: GrowParams,
    bag: u64,
) -> Bag {
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    rng.set_stream(bag);
    let rows = take(&mut rng, labels.len(), hp.sample_rate);
    let features = take(&mut rng, n_features, hp.feature_rate);
    let init = rows.iter().map(|&r| labels[r]).sum::<f64>() / rows.len() as f64;
    let mut fitted = vec![init; labels.len()];
    let mut grad = vec![0.0; labels.len()];
    let hess = vec![1.0; labels.len()];
    let rows32: Vec<u32> = rows.iter().map(|&r| r as u32).collect();
    let mut trees = Vec::with_capacity(hp.trees_per_bag);
    for _ in 0..hp.trees_per_bag {
        for &r in &rows {
            grad[r] = fitted[r] - labels[r];
        }
        let tree = grow(data, &rows32, &features, &grad, &hess, params);
        for &r in &rows {
            fitted[r] += hp.shrinkage * tree.predict(&x[r * n_features..(r + 1) * n_features]);
        }
        trees.push(tree);
    }
    Bag { init, trees }
}
