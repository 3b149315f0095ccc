use serde::{Deserialize, Serialize};

use super::{bootstrap_resample, prf1, split, EvalError, Metrics};
use crate::dataset::Dataset;
use crate::exec;
use crate::model::{Predictor, Trainer};
use crate::prelude::*;

/// Offset separating bootstrap seeds from split seeds of the same run.
const BOOTSTRAP_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

/// How repeated evaluation draws its splits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPlan {
    pub train_frac: f64,
    pub n_runs: usize,
    pub seed: u64,
    /// Resample each training split to `factor * n` rows before fitting.
    pub bootstrap_factor: Option<usize>,
}

impl Default for EvalPlan {
    fn default() -> Self {
        EvalPlan {
            train_frac: 2.0 / 3.0,
            n_runs: 1,
            seed: crate::DEFAULT_SEED,
            bootstrap_factor: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> MeanStd {
        if values.is_empty() {
            return MeanStd { mean: 0.0, std: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let all_equal = values.windows(2).all(|w| w[0] == w[1]);
        MeanStd {
            mean: if all_equal { values[0] } else { mean },
            std: if all_equal { 0.0 } else { libm::sqrt(var) },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
}

impl MetricSummary {
    pub fn of<'a>(metrics: impl Iterator<Item = &'a Metrics> + Clone) -> MetricSummary {
        let col = |f: fn(&Metrics) -> f64| MeanStd::of(&metrics.clone().map(f).collect::<Vec<_>>());
        MetricSummary {
            precision: col(|m| m.precision),
            recall: col(|m| m.recall),
            f1: col(|m| m.f1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub split_seed: u64,
    pub train_rows: usize,
    pub test_rows: usize,
    /// Metrics on the (un-resampled) training split.
    pub train: Metrics,
    pub test: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatedMetrics {
    pub plan: EvalPlan,
    pub runs: Vec<RunResult>,
    pub train: MetricSummary,
    pub test: MetricSummary,
}

impl RepeatedMetrics {
    pub fn from_runs(plan: EvalPlan, runs: Vec<RunResult>) -> RepeatedMetrics {
        RepeatedMetrics {
            train: MetricSummary::of(runs.iter().map(|r| &r.train)),
            test: MetricSummary::of(runs.iter().map(|r| &r.test)),
            plan,
            runs,
        }
    }
}

fn evaluate<T: Trainer>(trainer: &T, train: &Dataset, test: &Dataset) -> Result<(Metrics, Metrics), EvalError> {
    let model = trainer.fit(train)?;
    let train_m = prf1(train.labels(), &model.predict(train)?, None)?;
    let test_m = prf1(test.labels(), &model.predict(test)?, None)?;
    Ok((train_m, test_m))
}

/// Retrains and scores on `plan.n_runs` random splits; run `i` splits with
/// seed `plan.seed + i`. Runs are independent, so the result does not depend
/// on how they are scheduled.
pub fn repeated_eval<T: Trainer>(ds: &Dataset, trainer: &T, plan: &EvalPlan) -> Result<RepeatedMetrics, EvalError> {
    if plan.n_runs == 0 {
        return Err(EvalError::ZeroRuns);
    }
    let results = exec::map_indexed(plan.n_runs, |i| -> Result<RunResult, EvalError> {
        let split_seed = plan.seed.wrapping_add(i as u64);
        let (train, test) = split(ds, plan.train_frac, split_seed)?;
        let fit_on = match plan.bootstrap_factor {
            Some(f) => bootstrap_resample(&train, f, split_seed ^ BOOTSTRAP_STREAM)?,
            None => train.clone(),
        };
        let model = trainer.fit(&fit_on).map_err(EvalError::run(i))?;
        let train_pred = model.predict(&train).map_err(EvalError::run(i))?;
        let test_pred = model.predict(&test).map_err(EvalError::run(i))?;
        Ok(RunResult {
            split_seed,
            train_rows: train.n_rows(),
            test_rows: test.n_rows(),
            train: prf1(train.labels(), &train_pred, None)?,
            test: prf1(test.labels(), &test_pred, None)?,
        })
    });
    let runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(RepeatedMetrics::from_runs(*plan, runs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub label: String,
    /// Error message when the grid point failed.
    pub result: Result<RepeatedMetrics, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// Grid position with the highest mean test f1 (first on ties).
    pub best: Option<usize>,
}

/// Evaluates every `(label, trainer)` grid point with [`repeated_eval`].
/// A failing point is recorded and the sweep moves on.
pub fn hyperparam_sweep<T: Trainer>(
    ds: &Dataset,
    grid: &[(String, T)],
    plan: &EvalPlan,
) -> Result<SweepResult, EvalError> {
    if grid.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    let mut points = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, f64)> = None;
    for (i, (label, trainer)) in grid.iter().enumerate() {
        let result = repeated_eval(ds, trainer, plan).map_err(|e| {
            log::warn!("grid point {label} failed: {e}");
            e.to_string()
        });
        if let Ok(r) = &result {
            let f1 = r.test.f1.mean;
            if best.is_none_or(|(_, b)| f1 > b) {
                best = Some((i, f1));
            }
        }
        points.push(SweepPoint {
            label: label.clone(),
            result,
        });
    }
    Ok(SweepResult {
        points,
        best: best.map(|(i, _)| i),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossScenarioResult {
    pub train: Metrics,
    pub test: Metrics,
}

/// Trains on all of `train_ds` and scores on all of `test_ds`.
pub fn cross_scenario_eval<T: Trainer>(
    train_ds: &Dataset,
    test_ds: &Dataset,
    trainer: &T,
) -> Result<CrossScenarioResult, EvalError> {
    if train_ds.feature_names() != test_ds.feature_names() {
        return Err(EvalError::FeatureMismatch);
    }
    let (train, test) = evaluate(trainer, train_ds, test_ds)?;
    Ok(CrossScenarioResult { train, test })
}
