//! Metrics, splits and the repeated-run evaluation harness.

mod harness;
mod metrics;
mod split;

pub use harness::{
    cross_scenario_eval, hyperparam_sweep, repeated_eval, CrossScenarioResult, EvalPlan, MeanStd, MetricSummary,
    RepeatedMetrics, RunResult, SweepPoint, SweepResult,
};
pub use metrics::{prf1, Metrics};
pub use split::{bootstrap_resample, split, train_size};

use crate::model::ModelError;
use crate::prelude::*;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("label vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("labels must be 0 or 1")]
    NonBinary,
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    InvalidFraction(f64),
    #[error("split of {rows} rows leaves an empty side (train {train}, test {test})")]
    EmptySide { rows: usize, train: usize, test: usize },
    #[error("bootstrap factor must be at least 1")]
    ZeroFactor,
    #[error("run count must be at least 1")]
    ZeroRuns,
    #[error("feature names differ between training and test datasets")]
    FeatureMismatch,
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("run {index} failed: {source}")]
    Run {
        index: usize,
        #[source]
        source: ModelError,
    },
    #[error("model error: {0}")]
    Model(#[from] ModelError),
}

impl EvalError {
    pub(crate) fn run(index: usize) -> impl Fn(ModelError) -> EvalError {
        move |source| EvalError::Run { index, source }
    }
}

#[allow(dead_code)]
fn _assert_send_sync() {
    fn check<T: Send + Sync>() {}
    check::<EvalError>();
    check::<Vec<String>>();
}
