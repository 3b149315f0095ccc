use serde::{Deserialize, Serialize};

use super::SelectError;
use crate::dataset::Dataset;
use crate::eval::{prf1, split};
use crate::exec;
use crate::model::{Predictor, Trainer};
use crate::prelude::*;

/// Train fraction of the fixed split used to score subsets.
const SPLIT_FRACTION: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    /// Feature indices (into the input dataset) kept at this step.
    pub features: Vec<usize>,
    /// Held-out f1 of a model trained on `features`.
    pub f1: f64,
    /// Feature removed to reach this step; `None` for the initial step.
    pub removed: Option<usize>,
    /// `(candidate feature, f1 without it)` evaluated from this step.
    pub candidates: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub method: String,
    pub feature_names: Vec<String>,
    pub seed: u64,
    pub steps: Vec<SelectionStep>,
}

impl SelectionTrace {
    pub fn final_step(&self) -> &SelectionStep {
        self.steps.last().expect("trace always has an initial step")
    }
}

fn subset_f1<T: Trainer>(
    trainer: &T,
    train: &Dataset,
    test: &Dataset,
    subset: &[usize],
    step: usize,
) -> Result<f64, SelectError> {
    let context = || format!("{} features", subset.len());
    let wrap = |source| SelectError::Trainer {
        step,
        context: context(),
        source,
    };
    let tr = train.select_features(subset).expect("subset indices are valid");
    let te = test.select_features(subset).expect("subset indices are valid");
    let model = trainer.fit(&tr).map_err(wrap)?;
    let pred = model.predict(&te).map_err(wrap)?;
    Ok(prf1(te.labels(), &pred, None)?.f1)
}

/// Greedy backward elimination on one fixed 2/3 : 1/3 split.
///
/// Each step removes the feature whose removal gives the highest held-out
/// f1 (lowest index on ties), provided that f1 is at least the incumbent's.
/// Stops when every removal lowers f1 or a single feature is left.
pub fn backward_elimination<T: Trainer>(ds: &Dataset, trainer: &T, seed: u64) -> Result<SelectionTrace, SelectError> {
    let (train, test) = split(ds, SPLIT_FRACTION, seed)?;
    let mut current: Vec<usize> = (0..ds.n_features()).collect();
    let mut incumbent = subset_f1(trainer, &train, &test, &current, 0)?;
    let mut steps = vec![SelectionStep {
        features: current.clone(),
        f1: incumbent,
        removed: None,
        candidates: Vec::new(),
    }];

    while current.len() > 1 {
        let step = steps.len();
        let results = exec::map_indexed(current.len(), |pos| {
            let mut subset = current.clone();
            let removed = subset.remove(pos);
            subset_f1(trainer, &train, &test, &subset, step).map(|f1| (removed, f1))
        });
        let candidates: Vec<(usize, f64)> = results.into_iter().collect::<Result<_, _>>()?;
        // `current` is ascending, so the first maximum is the lowest index.
        let (best_pos, &(best_feature, best_f1)) = candidates
            .iter()
            .enumerate()
            .fold(None, |acc: Option<(usize, &(usize, f64))>, (i, c)| match acc {
                Some((_, b)) if b.1 >= c.1 => acc,
                _ => Some((i, c)),
            })
            .expect("at least two candidates");
        steps.last_mut().expect("nonempty").candidates = candidates.clone();
        if best_f1 < incumbent {
            break;
        }
        current.remove(best_pos);
        incumbent = best_f1;
        steps.push(SelectionStep {
            features: current.clone(),
            f1: best_f1,
            removed: Some(best_feature),
            candidates: Vec::new(),
        });
    }

    Ok(SelectionTrace {
        method: "backward".to_string(),
        feature_names: ds.feature_names().to_vec(),
        seed,
        steps,
    })
}
