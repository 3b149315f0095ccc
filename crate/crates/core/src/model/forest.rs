use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{fit_classification_tree, Tree, TreeParams};
use super::{Family, ForestParams, HyperParams, ModelArtifact, ModelError, ModelParams, TrainingMeta, FORMAT_VERSION};
use crate::dataset::Dataset;
use crate::exec;
use crate::prelude::*;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    /// Gini decrease per feature, normalized to sum 1 (all zero if no split).
    pub feature_importances: Vec<f64>,
}

impl ForestModel {
    /// Fraction of trees voting botnet.
    pub fn vote_fraction(&self, x: &[f64]) -> f64 {
        let votes: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        votes / self.trees.len() as f64
    }

    pub fn validate(&self, n_features: usize) -> Result<(), ModelError> {
        if self.trees.is_empty() {
            return Err(ModelError::Corrupt("forest without trees".into()));
        }
        if self.feature_importances.len() != n_features {
            return Err(ModelError::Corrupt("importance count".into()));
        }
        self.trees.iter().try_for_each(|t| t.validate(n_features))
    }
}

/// Maps every row to the first row with bit-identical features and the same
/// label. A tree only sees the multiset of sampled rows, so growing it on
/// canonical indices gives the same tree while duplicates (as produced by
/// bootstrap oversampling) collapse into weighted members.
fn canonical_rows(ds: &Dataset) -> Vec<usize> {
    let key = |i: usize| {
        (
            ds.row(i).iter().map(|v| v.to_bits()).collect::<Vec<u64>>(),
            ds.labels()[i],
        )
    };
    let mut first: BTreeMap<(Vec<u64>, u8), usize> = BTreeMap::new();
    (0..ds.n_rows()).map(|i| *first.entry(key(i)).or_insert(i)).collect()
}

/// Bagged Gini trees. Tree `t` draws its bootstrap sample and its per-split
/// feature subsets from a generator seeded with `seed + t`, so trees can be
/// grown in any order or in parallel with identical results.
pub fn train_random_forest(ds: &Dataset, p: &ForestParams) -> Result<ModelArtifact, ModelError> {
    if ds.is_empty() {
        return Err(ModelError::Empty);
    }
    HyperParams::RandomForest(p.clone()).validate()?;
    let n = ds.n_rows();
    let d = ds.n_features();
    let tree_params = TreeParams {
        max_depth: p.max_depth,
        max_features: p
            .max_features
            .unwrap_or_else(|| libm::floor(libm::sqrt(d as f64)) as usize)
            .clamp(1, d.max(1)),
    };
    let canonical = canonical_rows(ds);
    let grown = exec::map_indexed(p.n_trees, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed.wrapping_add(t as u64));
        let sample: Vec<usize> = (0..n).map(|_| canonical[rng.random_range(0..n)]).collect();
        fit_classification_tree(ds, &sample, &tree_params, &mut rng)
    });

    let mut importances = vec![0.0; d];
    let mut trees = Vec::with_capacity(grown.len());
    for (tree, imp) in grown {
        for (acc, v) in importances.iter_mut().zip(&imp) {
            *acc += v;
        }
        trees.push(tree);
    }
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        importances.iter_mut().for_each(|v| *v /= total);
    }

    Ok(ModelArtifact {
        format_version: FORMAT_VERSION,
        family: Family::RandomForest,
        hyperparams: HyperParams::RandomForest(p.clone()),
        feature_names: ds.feature_names().to_vec(),
        standardization: None,
        parameters: ModelParams::Forest(ForestModel {
            trees,
            feature_importances: importances,
        }),
        training: TrainingMeta {
            seed: Some(p.seed),
            iterations: p.n_trees,
            converged: true,
            loss_history: Vec::new(),
            train_rows: n,
        },
    })
}
