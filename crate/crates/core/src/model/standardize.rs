use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::prelude::*;

/// Per-feature centring and scaling learned on the training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    /// Population standard deviations; 1 for constant features.
    pub scales: Vec<f64>,
}

impl Standardization {
    pub fn fit(ds: &Dataset) -> Standardization {
        let d = ds.n_features();
        let n = ds.n_rows().max(1) as f64;
        let mut means = vec![0.0; d];
        for row in ds.rows() {
            for (m, x) in means.iter_mut().zip(row) {
                *m += x;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut scales = vec![0.0; d];
        for row in ds.rows() {
            for j in 0..d {
                let c = row[j] - means[j];
                scales[j] += c * c;
            }
        }
        for s in scales.iter_mut() {
            let sd = libm::sqrt(*s / n);
            *s = if sd > 0.0 && sd.is_finite() { sd } else { 1.0 };
        }
        Standardization { means, scales }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    /// Standardized copy of all rows, row-major.
    pub fn transform(&self, ds: &Dataset) -> Vec<f64> {
        ds.rows().flat_map(|r| self.apply(r)).collect()
    }
}
