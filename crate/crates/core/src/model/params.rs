use serde::{Deserialize, Serialize};

use super::{Family, ModelError};
use crate::prelude::*;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegParams {
    /// Inverse regularization strength.
    pub c: f64,
    /// Weights of the non-botnet and botnet class.
    pub class_weights: [f64; 2],
    pub max_iter: usize,
    /// Stop once the gradient norm falls below this.
    pub tol: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams {
            c: 550.0,
            class_weights: [0.044, 1.0],
            max_iter: 500,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    L1,
    L2,
    ElasticNet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelMap {
    Linear,
    /// All monomials of total degree `<= degree`.
    Polynomial {
        degree: u32,
    },
    /// Random Fourier features approximating `exp(-gamma |x - y|^2)`.
    Rbf {
        gamma: f64,
        rff_dim: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub alpha: f64,
    /// L1 share of the elastic-net penalty; only used with `ElasticNet`.
    pub l1_ratio: f64,
    pub penalty: Penalty,
    pub kernel: KernelMap,
    pub epochs: usize,
    pub class_weights: [f64; 2],
    /// Seeds both the per-epoch shuffle and the random Fourier features.
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            alpha: 1e-9,
            l1_ratio: 0.15,
            penalty: Penalty::L2,
            kernel: KernelMap::Polynomial { degree: 2 },
            epochs: 20,
            class_weights: [1.0, 1.0],
            seed: crate::DEFAULT_SEED,
        }
    }
}

impl SvmParams {
    pub fn effective_l1_ratio(&self) -> f64 {
        match self.penalty {
            Penalty::L1 => 1.0,
            Penalty::L2 => 0.0,
            Penalty::ElasticNet => self.l1_ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    /// Features tried per split; `None` means `floor(sqrt(d))`.
    pub max_features: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            max_features: None,
            seed: crate::DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoostLoss {
    /// Binomial log-loss.
    Deviance,
    /// AdaBoost-style exponential loss.
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    pub n_trees: usize,
    pub loss: BoostLoss,
    pub max_depth: usize,
    pub learning_rate: f64,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            n_trees: 100,
            loss: BoostLoss::Exponential,
            max_depth: 4,
            learning_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnParams {
    /// Widths of the hidden dense layers.
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for NnParams {
    fn default() -> Self {
        NnParams {
            hidden: vec![256, 128],
            epochs: 10,
            batch_size: 32,
            learning_rate: 0.01,
            momentum: 0.9,
            seed: crate::DEFAULT_SEED,
        }
    }
}

/// Hyperparameters of one classifier family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum HyperParams {
    #[serde(rename = "logreg")]
    LogReg(LogRegParams),
    #[serde(rename = "svm")]
    LinearSvm(SvmParams),
    #[serde(rename = "rf")]
    RandomForest(ForestParams),
    #[serde(rename = "gboost")]
    GradientBoosting(BoostParams),
    #[serde(rename = "nn")]
    DenseNn(NnParams),
}

fn positive(name: &'static str, v: f64) -> Result<(), ModelError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ModelError::invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

fn nonzero(name: &'static str, v: usize) -> Result<(), ModelError> {
    if v == 0 {
        Err(ModelError::invalid(name, "must be at least 1"))
    } else {
        Ok(())
    }
}

fn class_weights_ok(w: [f64; 2]) -> Result<(), ModelError> {
    if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w[0] + w[1] <= 0.0 {
        return Err(ModelError::invalid(
            "class_weights",
            "must be finite, non-negative and not both zero",
        ));
    }
    Ok(())
}

fn parse<T: core::str::FromStr>(key: &str, value: &str) -> Result<T, ModelError> {
    value.trim().parse().map_err(|_| ModelError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn parse_optional(key: &str, value: &str) -> Result<Option<usize>, ModelError> {
    match value.trim() {
        "none" | "None" | "unbounded" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

impl HyperParams {
    pub fn default_for(family: Family) -> HyperParams {
        match family {
            Family::LogReg => HyperParams::LogReg(LogRegParams::default()),
            Family::LinearSvm => HyperParams::LinearSvm(SvmParams::default()),
            Family::RandomForest => HyperParams::RandomForest(ForestParams::default()),
            Family::GradientBoosting => HyperParams::GradientBoosting(BoostParams::default()),
            Family::DenseNn => HyperParams::DenseNn(NnParams::default()),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            HyperParams::LogReg(_) => Family::LogReg,
            HyperParams::LinearSvm(_) => Family::LinearSvm,
            HyperParams::RandomForest(_) => Family::RandomForest,
            HyperParams::GradientBoosting(_) => Family::GradientBoosting,
            HyperParams::DenseNn(_) => Family::DenseNn,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            HyperParams::LogReg(_) | HyperParams::GradientBoosting(_) => None,
            HyperParams::LinearSvm(p) => Some(p.seed),
            HyperParams::RandomForest(p) => Some(p.seed),
            HyperParams::DenseNn(p) => Some(p.seed),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            HyperParams::LogReg(p) => {
                positive("c", p.c)?;
                class_weights_ok(p.class_weights)?;
                nonzero("max_iter", p.max_iter)?;
                positive("tol", p.tol)
            }
            HyperParams::LinearSvm(p) => {
                positive("alpha", p.alpha)?;
                if !(0.0..=1.0).contains(&p.l1_ratio) {
                    return Err(ModelError::invalid("l1_ratio", "must lie in [0, 1]"));
                }
                class_weights_ok(p.class_weights)?;
                nonzero("epochs", p.epochs)?;
                match p.kernel {
                    KernelMap::Linear => Ok(()),
                    KernelMap::Polynomial { degree } => nonzero("degree", degree as usize),
                    KernelMap::Rbf { gamma, rff_dim } => {
                        positive("gamma", gamma)?;
                        if rff_dim < 2 || !rff_dim.is_multiple_of(2) {
                            return Err(ModelError::invalid("rff_dim", "must be even and at least 2"));
                        }
                        Ok(())
                    }
                }
            }
            HyperParams::RandomForest(p) => {
                nonzero("n_trees", p.n_trees)?;
                if let Some(d) = p.max_depth {
                    nonzero("max_depth", d)?;
                }
                if let Some(m) = p.max_features {
                    nonzero("max_features", m)?;
                }
                Ok(())
            }
            HyperParams::GradientBoosting(p) => {
                nonzero("n_trees", p.n_trees)?;
                nonzero("max_depth", p.max_depth)?;
                positive("learning_rate", p.learning_rate)
            }
            HyperParams::DenseNn(p) => {
                if p.hidden.is_empty() || p.hidden.contains(&0) {
                    return Err(ModelError::invalid("hidden", "needs at least one layer of width >= 1"));
                }
                nonzero("epochs", p.epochs)?;
                nonzero("batch_size", p.batch_size)?;
                positive("learning_rate", p.learning_rate)?;
                if !(0.0..1.0).contains(&p.momentum) {
                    return Err(ModelError::invalid("momentum", "must lie in [0, 1)"));
                }
                Ok(())
            }
        }
    }

    /// Sets one hyperparameter from its textual form, as given on the
    /// command line (`key=value`). Hidden layer widths use `x` as separator
    /// (`256x128`); `max_depth=none` removes the depth bound.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ModelError> {
        let family = self.family();
        let unknown = || ModelError::UnknownParam {
            family,
            key: key.to_string(),
        };
        match self {
            HyperParams::LogReg(p) => match key {
                "c" | "C" => p.c = parse(key, value)?,
                "w0" | "weight_non_botnet" => p.class_weights[0] = parse(key, value)?,
                "w1" | "weight_botnet" => p.class_weights[1] = parse(key, value)?,
                "max_iter" => p.max_iter = parse(key, value)?,
                "tol" => p.tol = parse(key, value)?,
                _ => return Err(unknown()),
            },
            HyperParams::LinearSvm(p) => match key {
                "alpha" => p.alpha = parse(key, value)?,
                "l1_ratio" => p.l1_ratio = parse(key, value)?,
                "penalty" => {
                    p.penalty = match value {
                        "l1" => Penalty::L1,
                        "l2" => Penalty::L2,
                        "elasticnet" | "elastic_net" => Penalty::ElasticNet,
                        _ => {
                            return Err(ModelError::BadValue {
                                key: key.into(),
                                value: value.into(),
                            })
                        }
                    }
                }
                "kernel" => {
                    p.kernel = match value {
                        "linear" => KernelMap::Linear,
                        "poly" | "polynomial" => KernelMap::Polynomial { degree: 2 },
                        "rbf" => KernelMap::Rbf {
                            gamma: 0.03567,
                            rff_dim: 500,
                        },
                        _ => {
                            return Err(ModelError::BadValue {
                                key: key.into(),
                                value: value.into(),
                            })
                        }
                    }
                }
                "degree" => {
                    let d = parse(key, value)?;
                    p.kernel = KernelMap::Polynomial { degree: d };
                }
                "gamma" | "rff_dim" => {
                    let (mut gamma, mut rff_dim) = match p.kernel {
                        KernelMap::Rbf { gamma, rff_dim } => (gamma, rff_dim),
                        _ => (0.03567, 500),
                    };
                    if key == "gamma" {
                        gamma = parse(key, value)?;
                    } else {
                        rff_dim = parse(key, value)?;
                    }
                    p.kernel = KernelMap::Rbf { gamma, rff_dim };
                }
                "epochs" => p.epochs = parse(key, value)?,
                "w0" | "weight_non_botnet" => p.class_weights[0] = parse(key, value)?,
                "w1" | "weight_botnet" => p.class_weights[1] = parse(key, value)?,
                "seed" => p.seed = parse(key, value)?,
                _ => return Err(unknown()),
            },
            HyperParams::RandomForest(p) => match key {
                "n_trees" | "trees" => p.n_trees = parse(key, value)?,
                "max_depth" => p.max_depth = parse_optional(key, value)?,
                "max_features" => p.max_features = parse_optional(key, value)?,
                "seed" => p.seed = parse(key, value)?,
                _ => return Err(unknown()),
            },
            HyperParams::GradientBoosting(p) => match key {
                "n_trees" | "trees" => p.n_trees = parse(key, value)?,
                "max_depth" => p.max_depth = parse(key, value)?,
                "learning_rate" | "lr" => p.learning_rate = parse(key, value)?,
                "loss" => {
                    p.loss = match value {
                        "deviance" | "log_loss" => BoostLoss::Deviance,
                        "exponential" => BoostLoss::Exponential,
                        _ => {
                            return Err(ModelError::BadValue {
                                key: key.into(),
                                value: value.into(),
                            })
                        }
                    }
                }
                _ => return Err(unknown()),
            },
            HyperParams::DenseNn(p) => match key {
                "hidden" | "layers" => p.hidden = value.split('x').map(|w| parse(key, w)).collect::<Result<_, _>>()?,
                "epochs" => p.epochs = parse(key, value)?,
                "batch_size" | "batch" => p.batch_size = parse(key, value)?,
                "learning_rate" | "lr" => p.learning_rate = parse(key, value)?,
                "momentum" => p.momentum = parse(key, value)?,
                "seed" => p.seed = parse(key, value)?,
                _ => return Err(unknown()),
            },
        }
        Ok(())
    }
}
