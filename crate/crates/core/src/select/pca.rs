use serde::{Deserialize, Serialize};

use super::SelectError;
use crate::dataset::Dataset;
use crate::linalg::{dot, symmetric_eigen};
use crate::prelude::*;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    pub feature_names: Vec<String>,
    pub means: Vec<f64>,
    /// Population std per feature; 1 for constant features.
    pub scales: Vec<f64>,
    /// All eigenvalues of the standardized covariance, descending.
    pub eigenvalues: Vec<f64>,
    /// `k` orthonormal directions.
    pub components: Vec<Vec<f64>>,
    pub explained_variance_ratio: Vec<f64>,
    /// Row-major `n x k` coordinates.
    pub projected: Vec<f64>,
}

impl PcaResult {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn projected_row(&self, i: usize) -> &[f64] {
        let k = self.k();
        &self.projected[i * k..(i + 1) * k]
    }
}

/// Principal components of the standardized features.
///
/// `k` larger than the numerical rank still returns `k` components; the
/// trailing ones carry zero variance and a warning is logged.
pub fn pca(ds: &Dataset, k: usize) -> Result<PcaResult, SelectError> {
    let d = ds.n_features();
    let n = ds.n_rows();
    if k == 0 || k > d {
        return Err(SelectError::ComponentCount { k, features: d });
    }
    if n < 2 {
        return Err(SelectError::TooShort(n));
    }
    let nf = n as f64;
    let mut means = vec![0.0; d];
    for row in ds.rows() {
        for (m, x) in means.iter_mut().zip(row) {
            *m += x;
        }
    }
    means.iter_mut().for_each(|m| *m /= nf);
    let mut scales = vec![0.0; d];
    for row in ds.rows() {
        for j in 0..d {
            let c = row[j] - means[j];
            scales[j] += c * c;
        }
    }
    for s in scales.iter_mut() {
        let sd = libm::sqrt(*s / nf);
        *s = if sd > 0.0 { sd } else { 1.0 };
    }

    let z: Vec<f64> = ds
        .rows()
        .flat_map(|row| (0..d).map(|j| (row[j] - means[j]) / scales[j]).collect::<Vec<_>>())
        .collect();
    let mut cov = vec![0.0; d * d];
    for i in 0..n {
        let r = &z[i * d..(i + 1) * d];
        for a in 0..d {
            for b in a..d {
                cov[a * d + b] += r[a] * r[b];
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            cov[a * d + b] /= nf;
            cov[b * d + a] = cov[a * d + b];
        }
    }

    let eig = symmetric_eigen(&cov, d);
    let total: f64 = (0..d).map(|j| cov[j * d + j]).sum();
    let lambda_max = eig.values.first().copied().unwrap_or(0.0);
    let rank = eig
        .values
        .iter()
        .filter(|&&v| v > 1e-12 * lambda_max.max(f64::MIN_POSITIVE))
        .count();
    if k > rank {
        log::warn!("requested {k} components but the standardized data has rank {rank}");
    }

    let components: Vec<Vec<f64>> = eig.vectors.iter().take(k).cloned().collect();
    let explained_variance_ratio = eig
        .values
        .iter()
        .take(k)
        .map(|&v| if total > 0.0 { (v / total).clamp(0.0, 1.0) } else { 0.0 })
        .collect();
    let mut projected = Vec::with_capacity(n * k);
    for i in 0..n {
        let r = &z[i * d..(i + 1) * d];
        projected.extend(components.iter().map(|c| dot(r, c)));
    }
    Ok(PcaResult {
        feature_names: ds.feature_names().to_vec(),
        means,
        scales,
        eigenvalues: eig.values,
        components,
        explained_variance_ratio,
        projected,
    })
}
