use serde::{Deserialize, Serialize};

use super::SelectError;
use crate::dataset::Dataset;
use crate::prelude::*;

/// Minimum |r| with the label for a feature to pass the filter.
pub const DEFAULT_FILTER_THRESHOLD: f64 = 0.1;
/// Inter-feature |r| above which the weaker member of a pair is dropped.
pub const DEFAULT_REDUNDANCY_THRESHOLD: f64 = 0.95;

fn is_constant(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[0] == w[1])
}

/// Product-moment correlation of `x` and `y`, computed on centred values.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, SelectError> {
    if x.len() != y.len() {
        return Err(SelectError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(SelectError::TooShort(x.len()));
    }
    if is_constant(x) || is_constant(y) {
        return Err(SelectError::Constant);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Pairwise correlations; `None` marks rows/columns of constant features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    values: Vec<Option<f64>>,
}

impl CorrelationMatrix {
    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.dim() + j]
    }

    /// `(row, col, value)` triples for plotting; absent entries are skipped.
    pub fn tidy(&self) -> Vec<(&str, &str, f64)> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                if let Some(v) = self.get(i, j) {
                    out.push((self.names[i].as_str(), self.names[j].as_str(), v));
                }
            }
        }
        out
    }
}

pub fn correlation_matrix(ds: &Dataset) -> Result<CorrelationMatrix, SelectError> {
    if ds.n_rows() < 2 {
        return Err(SelectError::TooShort(ds.n_rows()));
    }
    let d = ds.n_features();
    let cols: Vec<Vec<f64>> = (0..d).map(|j| ds.column(j)).collect();
    let constant: Vec<bool> = cols.iter().map(|c| is_constant(c)).collect();
    let mut values = vec![None; d * d];
    for i in 0..d {
        if constant[i] {
            continue;
        }
        values[i * d + i] = Some(1.0);
        for j in i + 1..d {
            if constant[j] {
                continue;
            }
            let r = pearson(&cols[i], &cols[j]).ok();
            values[i * d + j] = r;
            values[j * d + i] = r;
        }
    }
    Ok(CorrelationMatrix {
        names: ds.feature_names().to_vec(),
        values,
    })
}

/// Outcome of the two-stage correlation filter. Index lists are ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSelection {
    pub threshold: f64,
    pub redundancy_threshold: f64,
    /// Correlation of each feature with the label; `None` for constant features.
    pub label_correlation: Vec<Option<f64>>,
    pub excluded_constant: Vec<usize>,
    /// Features with |r(feature, label)| above the threshold.
    pub relevant: Vec<usize>,
    /// `relevant` after removing the weaker member of highly correlated pairs.
    pub pruned: Vec<usize>,
}

/// Filters features by label correlation, then prunes redundant ones.
///
/// Pruning visits relevant features by descending |r| with the label (ties
/// by index) and keeps a feature only if its |r| with every kept feature is
/// at most `redundancy`.
pub fn filter_select(ds: &Dataset, threshold: f64, redundancy: f64) -> Result<FilterSelection, SelectError> {
    if ds.n_rows() < 2 {
        return Err(SelectError::TooShort(ds.n_rows()));
    }
    if !ds.has_both_classes() {
        return Err(SelectError::SingleClass);
    }
    let y = ds.label_column();
    let cols: Vec<Vec<f64>> = (0..ds.n_features()).map(|j| ds.column(j)).collect();
    let mut label_correlation = Vec::with_capacity(cols.len());
    let mut excluded_constant = Vec::new();
    for (j, c) in cols.iter().enumerate() {
        match pearson(c, &y) {
            Ok(r) => label_correlation.push(Some(r)),
            Err(_) => {
                log::warn!(
                    "feature {} is constant; excluded from the filter",
                    ds.feature_names()[j]
                );
                excluded_constant.push(j);
                label_correlation.push(None);
            }
        }
    }
    let relevant: Vec<usize> = label_correlation
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_some_and(|r| libm::fabs(r) > threshold))
        .map(|(j, _)| j)
        .collect();

    let strength = |j: usize| libm::fabs(label_correlation[j].unwrap_or(0.0));
    let mut order = relevant.clone();
    order.sort_by(|&a, &b| strength(b).total_cmp(&strength(a)).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for j in order {
        let redundant = kept
            .iter()
            .any(|&k| pearson(&cols[j], &cols[k]).is_ok_and(|r| libm::fabs(r) > redundancy));
        if !redundant {
            kept.push(j);
        }
    }
    kept.sort_unstable();

    Ok(FilterSelection {
        threshold,
        redundancy_threshold: redundancy,
        label_correlation,
        excluded_constant,
        relevant,
        pruned: kept,
    })
}
