//! The five classifier families behind one train/predict contract.
//!
//! Every trained model is a [`ModelArtifact`]: a self-describing value that
//! carries its hyperparameters, feature ordering, input standardization and
//! learned parameters. Scores lie in `[0, 1]`; a score of exactly 0.5 is
//! labelled botnet.

mod boost;
mod forest;
mod kernel;
mod logreg;
mod nn;
mod params;
mod standardize;
mod svm;
mod tree;

use core::fmt;

use serde::{Deserialize, Serialize};

pub use boost::{train_gradient_boosting, BoostModel};
pub use forest::{train_random_forest, ForestModel};
pub use kernel::{map_polynomial, map_rff, polynomial_terms, FeatureMap, RffMap};
pub use logreg::train_logreg;
pub use nn::{train_dense_nn, BatchNorm, DenseLayer, DenseNet, HiddenBlock};
pub use params::{
    BoostLoss, BoostParams, ForestParams, HyperParams, KernelMap, LogRegParams, NnParams, Penalty, SvmParams,
};
pub use standardize::Standardization;
pub use svm::train_linear_svm;
pub use tree::{fit_classification_tree, Node, Tree, TreeParams};

use crate::dataset::Dataset;
use crate::prelude::*;

/// Version written into every serialized artifact.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("training data is empty")]
    Empty,
    #[error("invalid hyperparameter {name}: {reason}")]
    InvalidHyperParam { name: &'static str, reason: String },
    #[error("unknown hyperparameter {key:?} for family {family}")]
    UnknownParam { family: Family, key: String },
    #[error("cannot parse {value:?} for hyperparameter {key}")]
    BadValue { key: String, value: String },
    #[error("input has {found} features, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("loss became non-finite at epoch {epoch}, batch {batch} (single-class batch: {single_class})")]
    NonFinite {
        epoch: usize,
        batch: usize,
        single_class: bool,
    },
    #[error("artifact is inconsistent: {0}")]
    Corrupt(String),
    #[error("unsupported artifact format version {0}")]
    Version(u32),
}

impl ModelError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> ModelError {
        ModelError::InvalidHyperParam {
            name,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "logreg")]
    LogReg,
    #[serde(rename = "svm")]
    LinearSvm,
    #[serde(rename = "rf")]
    RandomForest,
    #[serde(rename = "gboost")]
    GradientBoosting,
    #[serde(rename = "nn")]
    DenseNn,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::LogReg,
        Family::LinearSvm,
        Family::RandomForest,
        Family::GradientBoosting,
        Family::DenseNn,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Family::LogReg => "logreg",
            Family::LinearSvm => "svm",
            Family::RandomForest => "rf",
            Family::GradientBoosting => "gboost",
            Family::DenseNn => "nn",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.tag() == tag)
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Family::LogReg => "Logistic Regression",
            Family::LinearSvm => "Support Vector Machine",
            Family::RandomForest => "Random Forest",
            Family::GradientBoosting => "Gradient Boosting",
            Family::DenseNn => "Dense Neural Network",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Weights and intercept of a linear decision function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        crate::linalg::dot(&self.weights, x) + self.intercept
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Linear(LinearModel),
    Forest(ForestModel),
    Boosting(BoostModel),
    Dense(DenseNet),
}

/// Optimizer bookkeeping recorded alongside the parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: Option<u64>,
    pub iterations: usize,
    pub converged: bool,
    /// Training loss per iteration, stage or epoch. The linear models and
    /// boosting also record the loss at initialization first; forests leave
    /// this empty.
    pub loss_history: Vec<f64>,
    pub train_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub family: Family,
    pub hyperparams: HyperParams,
    pub feature_names: Vec<String>,
    pub standardization: Option<Standardization>,
    pub parameters: ModelParams,
    pub training: TrainingMeta,
}

/// Label at threshold 0.5, ties to botnet.
pub fn label_of(score: f64) -> u8 {
    u8::from(score >= 0.5)
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

impl ModelArtifact {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn check_width(&self, found: usize) -> Result<(), ModelError> {
        if found != self.n_features() {
            return Err(ModelError::DimensionMismatch {
                expected: self.n_features(),
                found,
            });
        }
        Ok(())
    }

    /// Score of one raw (unstandardized) feature row.
    pub fn score_row(&self, row: &[f64]) -> Result<f64, ModelError> {
        self.check_width(row.len())?;
        let z: Vec<f64>;
        let x = match &self.standardization {
            Some(s) => {
                z = s.apply(row);
                &z[..]
            }
            None => row,
        };
        Ok(match (&self.parameters, &self.hyperparams) {
            (ModelParams::Linear(lin), HyperParams::LinearSvm(p)) => {
                let phi = FeatureMap::for_svm(p, self.n_features())?.apply(x);
                sigmoid(lin.decision(&phi))
            }
            (ModelParams::Linear(lin), _) => sigmoid(lin.decision(x)),
            (ModelParams::Forest(f), _) => f.vote_fraction(x),
            (ModelParams::Boosting(b), _) => b.probability(x),
            (ModelParams::Dense(net), _) => net.predict_proba(x),
        })
    }

    /// Scores for a row-major matrix with `width` columns.
    pub fn predict_scores(&self, values: &[f64], width: usize) -> Result<Vec<f64>, ModelError> {
        self.check_width(width)?;
        if width == 0 {
            return Ok(Vec::new());
        }
        // The kernel map is rebuilt once rather than per row.
        if let (ModelParams::Linear(lin), HyperParams::LinearSvm(p)) = (&self.parameters, &self.hyperparams) {
            let map = FeatureMap::for_svm(p, width)?;
            return Ok(values
                .chunks(width)
                .map(|row| {
                    let z = match &self.standardization {
                        Some(s) => s.apply(row),
                        None => row.to_vec(),
                    };
                    sigmoid(lin.decision(&map.apply(&z)))
                })
                .collect());
        }
        values.chunks(width).map(|row| self.score_row(row)).collect()
    }

    pub fn predict_dataset_scores(&self, ds: &Dataset) -> Result<Vec<f64>, ModelError> {
        self.predict_scores(ds.values(), ds.n_features())
    }

    /// Checks parameter shapes against the feature count and architecture.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.format_version != FORMAT_VERSION {
            return Err(ModelError::Version(self.format_version));
        }
        if self.family != self.hyperparams.family() {
            return Err(ModelError::Corrupt("family tag disagrees with hyperparameters".into()));
        }
        let d = self.n_features();
        if let Some(s) = &self.standardization {
            if s.means.len() != d || s.scales.len() != d {
                return Err(ModelError::Corrupt("standardization width".into()));
            }
        }
        match (&self.parameters, &self.hyperparams) {
            (ModelParams::Linear(lin), HyperParams::LogReg(_)) if lin.weights.len() != d => {
                Err(ModelError::Corrupt("weight count".into()))
            }
            (ModelParams::Linear(lin), HyperParams::LinearSvm(p)) => {
                if lin.weights.len() != FeatureMap::for_svm(p, d)?.output_dim() {
                    Err(ModelError::Corrupt("weight count".into()))
                } else {
                    Ok(())
                }
            }
            (ModelParams::Linear(_), HyperParams::LogReg(_)) => Ok(()),
            (ModelParams::Forest(f), HyperParams::RandomForest(_)) => f.validate(d),
            (ModelParams::Boosting(b), HyperParams::GradientBoosting(_)) => b.validate(d),
            (ModelParams::Dense(net), HyperParams::DenseNn(_)) => net.validate(d),
            _ => Err(ModelError::Corrupt("parameter kind does not match family".into())),
        }
    }
}

/// Anything that labels the rows of a dataset.
pub trait Predictor {
    fn predict(&self, ds: &Dataset) -> Result<Vec<u8>, ModelError>;
}

impl Predictor for ModelArtifact {
    fn predict(&self, ds: &Dataset) -> Result<Vec<u8>, ModelError> {
        Ok(self.predict_dataset_scores(ds)?.into_iter().map(label_of).collect())
    }
}

/// A training procedure. `Sync` so evaluation runs can share it.
pub trait Trainer: Sync {
    type Model: Predictor + Send;

    fn fit(&self, ds: &Dataset) -> Result<Self::Model, ModelError>;
}

impl Trainer for HyperParams {
    type Model = ModelArtifact;

    fn fit(&self, ds: &Dataset) -> Result<ModelArtifact, ModelError> {
        train(ds, self)
    }
}

/// Adapts a closure into a [`Trainer`].
pub struct FnTrainer<F>(pub F);

impl<F, M> Trainer for FnTrainer<F>
where
    F: Fn(&Dataset) -> Result<M, ModelError> + Sync,
    M: Predictor + Send,
{
    type Model = M;

    fn fit(&self, ds: &Dataset) -> Result<M, ModelError> {
        (self.0)(ds)
    }
}

pub(crate) fn require_both_classes(ds: &Dataset) -> Result<(), ModelError> {
    if ds.is_empty() {
        return Err(ModelError::Empty);
    }
    if !ds.has_both_classes() {
        return Err(ModelError::SingleClass);
    }
    Ok(())
}

/// Trains the family selected by `hp`.
pub fn train(ds: &Dataset, hp: &HyperParams) -> Result<ModelArtifact, ModelError> {
    hp.validate()?;
    match hp {
        HyperParams::LogReg(p) => train_logreg(ds, p),
        HyperParams::LinearSvm(p) => train_linear_svm(ds, p),
        HyperParams::RandomForest(p) => train_random_forest(ds, p),
        HyperParams::GradientBoosting(p) => train_gradient_boosting(ds, p),
        HyperParams::DenseNn(p) => train_dense_nn(ds, p),
    }
}
