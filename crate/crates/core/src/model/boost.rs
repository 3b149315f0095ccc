use serde::{Deserialize, Serialize};

use super::logreg::softplus;
use super::tree::{fit_regression_tree, presort, Node, Tree};
use super::{
    require_both_classes, sigmoid, BoostLoss, BoostParams, Family, HyperParams, ModelArtifact, ModelError, ModelParams,
    TrainingMeta, FORMAT_VERSION,
};
use crate::dataset::Dataset;
use crate::prelude::*;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostModel {
    pub loss: BoostLoss,
    /// Initial raw score shared by every row.
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl BoostModel {
    pub fn raw_score(&self, x: &[f64]) -> f64 {
        self.trees
            .iter()
            .fold(self.init, |f, t| f + self.learning_rate * t.predict(x))
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        let f = self.raw_score(x);
        match self.loss {
            BoostLoss::Deviance => sigmoid(f),
            BoostLoss::Exponential => sigmoid(2.0 * f),
        }
    }

    pub fn validate(&self, n_features: usize) -> Result<(), ModelError> {
        if self.trees.is_empty() {
            return Err(ModelError::Corrupt("boosting model without stages".into()));
        }
        self.trees.iter().try_for_each(|t| t.validate(n_features))
    }
}

fn mean_loss(loss: BoostLoss, y: &[u8], f: &[f64]) -> f64 {
    let total: f64 = y
        .iter()
        .zip(f)
        .map(|(&yi, &fi)| match loss {
            BoostLoss::Deviance => softplus(fi) - f64::from(yi) * fi,
            BoostLoss::Exponential => libm::exp(-(2.0 * f64::from(yi) - 1.0) * fi),
        })
        .sum();
    total / y.len() as f64
}

/// Stagewise boosting of least-squares regression trees on the negative
/// loss gradient, with one Newton step per leaf.
///
/// Deviance: `F0 = ln(p / (1 - p))`, leaf value `sum r / sum p(1 - p)`,
/// score `sigmoid(F)`. Exponential (labels mapped to -1/+1): `F0 = ln(p / (1 - p)) / 2`,
/// leaf value `sum y e^{-yF} / sum e^{-yF}`, score `sigmoid(2F)`. The
/// training loss after every stage is kept in the artifact.
pub fn train_gradient_boosting(ds: &Dataset, p: &BoostParams) -> Result<ModelArtifact, ModelError> {
    require_both_classes(ds)?;
    HyperParams::GradientBoosting(p.clone()).validate()?;
    let n = ds.n_rows();
    let d = ds.n_features();
    let y = ds.labels();
    let prior = ds.positives() as f64 / n as f64;
    let log_odds = libm::log(prior / (1.0 - prior));
    let init = match p.loss {
        BoostLoss::Deviance => log_odds,
        BoostLoss::Exponential => 0.5 * log_odds,
    };
    let sorted = presort(ds.values(), n, d);
    let mut f = vec![init; n];
    let mut residual = vec![0.0; n];
    let mut history = vec![mean_loss(p.loss, y, &f)];
    let mut trees = Vec::with_capacity(p.n_trees);

    for _ in 0..p.n_trees {
        // Newton numerator and denominator per row.
        let mut num = vec![0.0; n];
        let mut den = vec![0.0; n];
        for i in 0..n {
            let yi = f64::from(y[i]);
            match p.loss {
                BoostLoss::Deviance => {
                    let pi = sigmoid(f[i]);
                    residual[i] = yi - pi;
                    num[i] = residual[i];
                    den[i] = pi * (1.0 - pi);
                }
                BoostLoss::Exponential => {
                    let ys = 2.0 * yi - 1.0;
                    let e = libm::exp(-ys * f[i]);
                    residual[i] = ys * e;
                    num[i] = ys * e;
                    den[i] = e;
                }
            }
        }
        let (mut tree, leaf_of) = fit_regression_tree(ds.values(), d, &sorted, &residual, p.max_depth);
        let mut leaf_num = vec![0.0; tree.nodes.len()];
        let mut leaf_den = vec![0.0; tree.nodes.len()];
        for i in 0..n {
            leaf_num[leaf_of[i]] += num[i];
            leaf_den[leaf_of[i]] += den[i];
        }
        for (k, node) in tree.nodes.iter_mut().enumerate() {
            if let Node::Leaf { value } = node {
                *value = if leaf_den[k].abs() < 1e-150 {
                    0.0
                } else {
                    leaf_num[k] / leaf_den[k]
                };
            }
        }
        for i in 0..n {
            if let Node::Leaf { value } = tree.nodes[leaf_of[i]] {
                f[i] += p.learning_rate * value;
            }
        }
        history.push(mean_loss(p.loss, y, &f));
        trees.push(tree);
    }

    Ok(ModelArtifact {
        format_version: FORMAT_VERSION,
        family: Family::GradientBoosting,
        hyperparams: HyperParams::GradientBoosting(p.clone()),
        feature_names: ds.feature_names().to_vec(),
        standardization: None,
        parameters: ModelParams::Boosting(BoostModel {
            loss: p.loss,
            init,
            learning_rate: p.learning_rate,
            trees,
        }),
        training: TrainingMeta {
            seed: None,
            iterations: p.n_trees,
            converged: true,
            loss_history: history,
            train_rows: n,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stored_scores_match_training_trajectory() {
        let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![f64::from(i), f64::from(i % 4)]).collect();
        let labels: Vec<u8> = (0..12).map(|i| u8::from(i % 4 >= 2)).collect();
        let ds = Dataset::from_rows(Dataset::generic_names(2), &rows, labels).unwrap();
        for loss in [BoostLoss::Deviance, BoostLoss::Exponential] {
            let p = BoostParams {
                n_trees: 10,
                loss,
                ..BoostParams::default()
            };
            let m = train_gradient_boosting(&ds, &p).unwrap();
            let ModelParams::Boosting(b) = &m.parameters else {
                unreachable!()
            };
            let raw: Vec<f64> = ds.rows().map(|r| b.raw_score(r)).collect();
            let last = *m.training.loss_history.last().unwrap();
            assert!((mean_loss(loss, ds.labels(), &raw) - last).abs() < 1e-12);
        }
    }
}
