//! Labelled feature matrix shared by selection, training and evaluation.

use serde::{Deserialize, Serialize};

use crate::prelude::*;
use crate::window::WindowConfig;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DatasetError {
    #[error("matrix has {values} values, expected {rows} rows x {cols} features")]
    Shape { values: usize, rows: usize, cols: usize },
    #[error("{labels} labels for {rows} rows")]
    LabelCount { labels: usize, rows: usize },
    #[error("{keys} row keys for {rows} rows")]
    KeyCount { keys: usize, rows: usize },
    #[error("label {0} is not binary")]
    NonBinaryLabel(u8),
    #[error("feature value at row {row}, column {col} is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("feature index {0} out of range")]
    FeatureIndex(usize),
}

/// Identity of a row: the window and source address it aggregates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RowKey {
    pub window_index: u64,
    pub src_addr: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub scenario: String,
    pub window: Option<WindowConfig>,
    /// One key per row; empty when rows have no window provenance.
    pub keys: Vec<RowKey>,
}

/// Row-major `n x d` feature matrix with binary labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    values: Vec<f64>,
    labels: Vec<u8>,
    feature_names: Vec<String>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        values: Vec<f64>,
        labels: Vec<u8>,
        meta: DatasetMeta,
    ) -> Result<Dataset, DatasetError> {
        let cols = feature_names.len();
        let rows = labels.len();
        if values.len() != rows * cols {
            return Err(DatasetError::Shape {
                values: values.len(),
                rows,
                cols,
            });
        }
        if !meta.keys.is_empty() && meta.keys.len() != rows {
            return Err(DatasetError::KeyCount {
                keys: meta.keys.len(),
                rows,
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
            return Err(DatasetError::NonBinaryLabel(bad));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(DatasetError::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Dataset {
            values,
            labels,
            feature_names,
            meta,
        })
    }

    /// Builds a dataset from rows; convenient for tests and small inputs.
    pub fn from_rows(feature_names: Vec<String>, rows: &[Vec<f64>], labels: Vec<u8>) -> Result<Dataset, DatasetError> {
        let cols = feature_names.len();
        let mut values = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(DatasetError::Shape {
                    values: r.len(),
                    rows: 1,
                    cols,
                });
            }
            values.extend_from_slice(r);
        }
        if labels.len() != rows.len() {
            return Err(DatasetError::LabelCount {
                labels: labels.len(),
                rows: rows.len(),
            });
        }
        Dataset::new(feature_names, values, labels, DatasetMeta::default())
    }

    /// Feature names `f0, f1, ...` for ad-hoc matrices.
    pub fn generic_names(d: usize) -> Vec<String> {
        (0..d).map(|i| format!("f{i}")).collect()
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Raw row-major values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_features();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        let d = self.n_features().max(1);
        self.values.chunks(d).take(self.n_rows())
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        let d = self.n_features();
        (0..self.n_rows()).map(|i| self.values[i * d + j]).collect()
    }

    pub fn label_column(&self) -> Vec<f64> {
        self.labels.iter().map(|&l| f64::from(l)).collect()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn has_both_classes(&self) -> bool {
        let p = self.positives();
        p > 0 && p < self.n_rows()
    }

    /// Fraction of botnet rows, in per mille.
    pub fn botnet_permille(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            1000.0 * self.positives() as f64 / self.n_rows() as f64
        }
    }

    /// Rows at `indices`, in the given order (duplicates allowed).
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        let d = self.n_features();
        let mut values = Vec::with_capacity(indices.len() * d);
        let mut labels = Vec::with_capacity(indices.len());
        let mut keys = Vec::new();
        for &i in indices {
            values.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
            if !self.meta.keys.is_empty() {
                keys.push(self.meta.keys[i].clone());
            }
        }
        Dataset {
            values,
            labels,
            feature_names: self.feature_names.clone(),
            meta: DatasetMeta {
                scenario: self.meta.scenario.clone(),
                window: self.meta.window,
                keys,
            },
        }
    }

    /// Columns at `features`, in the given order.
    pub fn select_features(&self, features: &[usize]) -> Result<Dataset, DatasetError> {
        let d = self.n_features();
        if let Some(&bad) = features.iter().find(|&&j| j >= d) {
            return Err(DatasetError::FeatureIndex(bad));
        }
        let mut values = Vec::with_capacity(self.n_rows() * features.len());
        for row in self.rows() {
            values.extend(features.iter().map(|&j| row[j]));
        }
        Ok(Dataset {
            values,
            labels: self.labels.clone(),
            feature_names: features.iter().map(|&j| self.feature_names[j].clone()).collect(),
            meta: self.meta.clone(),
        })
    }

    /// Same rows with labels replaced; used for symmetry checks.
    pub fn with_labels(&self, labels: Vec<u8>) -> Result<Dataset, DatasetError> {
        Dataset::new(
            self.feature_names.clone(),
            self.values.clone(),
            labels,
            self.meta.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        Dataset::from_rows(
            Dataset::generic_names(2),
            &[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]],
            vec![0, 1, 0],
        )
        .unwrap()
    }

    #[test]
    fn shape_checks() {
        assert!(matches!(
            Dataset::new(
                Dataset::generic_names(2),
                vec![1.0; 5],
                vec![0, 1],
                DatasetMeta::default()
            ),
            Err(DatasetError::Shape { .. })
        ));
        assert!(matches!(
            Dataset::new(
                Dataset::generic_names(1),
                vec![f64::NAN],
                vec![0],
                DatasetMeta::default()
            ),
            Err(DatasetError::NonFinite { row: 0, col: 0 })
        ));
        assert!(matches!(
            Dataset::new(Dataset::generic_names(1), vec![1.0], vec![2], DatasetMeta::default()),
            Err(DatasetError::NonBinaryLabel(2))
        ));
    }

    #[test]
    fn row_and_column_selection() {
        let ds = tiny();
        assert_eq!(ds.column(1), vec![2.0, 4.0, 6.0]);
        let sub = ds.select_rows(&[2, 2, 1]);
        assert_eq!(sub.labels(), &[0, 0, 1]);
        assert_eq!(sub.row(2), &[3.0, 4.0]);
        let cols = ds.select_features(&[1]).unwrap();
        assert_eq!(cols.feature_names(), &["f1".to_string()]);
        assert_eq!(cols.values(), &[2.0, 4.0, 6.0]);
        assert!(ds.select_features(&[2]).is_err());
        assert!((ds.botnet_permille() - 1000.0 / 3.0).abs() < 1e-12);
    }
}
