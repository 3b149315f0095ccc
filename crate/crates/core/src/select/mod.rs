//! Feature-selection analyses: correlation filter, backward elimination,
//! and principal components.

mod backward;
mod correlation;
mod pca;

pub use backward::{backward_elimination, SelectionStep, SelectionTrace};
pub use correlation::{
    correlation_matrix, filter_select, pearson, CorrelationMatrix, FilterSelection, DEFAULT_FILTER_THRESHOLD,
    DEFAULT_REDUNDANCY_THRESHOLD,
};
pub use pca::{pca, PcaResult};

use crate::eval::EvalError;
use crate::model::ModelError;
use crate::prelude::*;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SelectError {
    #[error("vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 observations, got {0}")]
    TooShort(usize),
    #[error("correlation undefined for a constant vector")]
    Constant,
    #[error("both classes must be present")]
    SingleClass,
    #[error("component count {k} outside 1..={features}")]
    ComponentCount { k: usize, features: usize },
    #[error("training failed at elimination step {step} ({context}): {source}")]
    Trainer {
        step: usize,
        context: String,
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Split(#[from] EvalError),
}
