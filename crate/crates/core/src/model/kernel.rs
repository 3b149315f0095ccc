use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{KernelMap, ModelError, SvmParams};
use crate::prelude::*;

/// Monomials of total degree `<= degree` over `d` variables, each given as a
/// non-decreasing list of variable indices. Ordered by degree, then
/// lexicographically; the first entry is the empty list (the constant 1).
pub fn polynomial_terms(d: usize, degree: u32) -> Vec<Vec<usize>> {
    let mut terms = vec![Vec::new()];
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..degree {
        let mut next = Vec::new();
        for t in &frontier {
            let start = t.last().copied().unwrap_or(0);
            for j in start..d {
                let mut m = t.clone();
                m.push(j);
                next.push(m);
            }
        }
        terms.extend(next.iter().cloned());
        frontier = next;
    }
    terms
}

/// Random Fourier features for the RBF kernel `exp(-gamma |x - y|^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RffMap {
    input_dim: usize,
    /// Row-major `rff_dim x input_dim` frequencies.
    omega: Vec<f64>,
    offset: Vec<f64>,
    scale: f64,
}

impl RffMap {
    pub fn new(input_dim: usize, gamma: f64, rff_dim: usize, seed: u64) -> Result<RffMap, ModelError> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(ModelError::invalid(
                "gamma",
                format!("must be finite and > 0, got {gamma}"),
            ));
        }
        if rff_dim < 2 || !rff_dim.is_multiple_of(2) {
            return Err(ModelError::invalid("rff_dim", "must be even and at least 2"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, libm::sqrt(2.0 * gamma)).expect("std is positive");
        let omega = (0..rff_dim * input_dim).map(|_| normal.sample(&mut rng)).collect();
        let offset = (0..rff_dim)
            .map(|_| rng.random::<f64>() * 2.0 * core::f64::consts::PI)
            .collect();
        Ok(RffMap {
            input_dim,
            omega,
            offset,
            scale: libm::sqrt(2.0 / rff_dim as f64),
        })
    }

    pub fn output_dim(&self) -> usize {
        self.offset.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.omega
            .chunks(self.input_dim.max(1))
            .zip(&self.offset)
            .map(|(w, b)| {
                let proj: f64 = if self.input_dim == 0 {
                    0.0
                } else {
                    crate::linalg::dot(w, x)
                };
                self.scale * libm::cos(proj + b)
            })
            .collect()
    }
}

/// Explicit feature map in front of the linear SGD trainer.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMap {
    Identity(usize),
    Polynomial(Vec<Vec<usize>>),
    Rff(RffMap),
}

impl FeatureMap {
    pub fn for_svm(p: &SvmParams, input_dim: usize) -> Result<FeatureMap, ModelError> {
        Ok(match p.kernel {
            KernelMap::Linear => FeatureMap::Identity(input_dim),
            KernelMap::Polynomial { degree } => {
                if degree == 0 {
                    return Err(ModelError::invalid("degree", "must be at least 1"));
                }
                FeatureMap::Polynomial(polynomial_terms(input_dim, degree))
            }
            KernelMap::Rbf { gamma, rff_dim } => FeatureMap::Rff(RffMap::new(input_dim, gamma, rff_dim, p.seed)?),
        })
    }

    pub fn output_dim(&self) -> usize {
        match self {
            FeatureMap::Identity(d) => *d,
            FeatureMap::Polynomial(terms) => terms.len(),
            FeatureMap::Rff(m) => m.output_dim(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            FeatureMap::Identity(_) => x.to_vec(),
            FeatureMap::Polynomial(terms) => terms.iter().map(|t| t.iter().fold(1.0, |acc, &j| acc * x[j])).collect(),
            FeatureMap::Rff(m) => m.apply(x),
        }
    }
}

fn map_rows(rows: &[f64], d: usize, map: &FeatureMap) -> Vec<f64> {
    if d == 0 {
        return Vec::new();
    }
    rows.chunks(d).flat_map(|r| map.apply(r)).collect()
}

/// Expands row-major `rows` (width `d`) into all monomials of total degree
/// `<= degree`. Returns the mapped rows and their width.
pub fn map_polynomial(rows: &[f64], d: usize, degree: u32) -> Result<(Vec<f64>, usize), ModelError> {
    if degree == 0 {
        return Err(ModelError::invalid("degree", "must be at least 1"));
    }
    let map = FeatureMap::Polynomial(polynomial_terms(d, degree));
    Ok((map_rows(rows, d, &map), map.output_dim()))
}

/// Maps row-major `rows` (width `d`) to `rff_dim` random Fourier features.
pub fn map_rff(rows: &[f64], d: usize, gamma: f64, rff_dim: usize, seed: u64) -> Result<Vec<f64>, ModelError> {
    let map = FeatureMap::Rff(RffMap::new(d, gamma, rff_dim, seed)?);
    Ok(map_rows(rows, d, &map))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_two_in_two_variables() {
        let (out, w) = map_polynomial(&[2.0, 3.0], 2, 2).unwrap();
        assert_eq!(w, 6);
        assert_eq!(out, vec![1.0, 2.0, 3.0, 4.0, 6.0, 9.0]);
    }

    #[test]
    fn degree_one_is_identity_plus_constant() {
        let (out, w) = map_polynomial(&[5.0, -1.0, 0.5], 3, 1).unwrap();
        assert_eq!(w, 4);
        assert_eq!(out, vec![1.0, 5.0, -1.0, 0.5]);
    }

    #[test]
    fn rff_rejects_bad_shapes() {
        assert!(map_rff(&[1.0], 1, 0.0, 4, 1).is_err());
        assert!(map_rff(&[1.0], 1, -1.0, 4, 1).is_err());
        assert!(map_rff(&[1.0], 1, 1.0, 3, 1).is_err());
        assert_eq!(map_rff(&[1.0, 2.0], 1, 1.0, 4, 1).unwrap().len(), 8);
    }

    #[test]
    fn rff_seed_fixes_map() {
        let a = map_rff(&[0.3, 0.4], 2, 0.5, 16, 7).unwrap();
        let b = map_rff(&[0.3, 0.4], 2, 0.5, 16, 7).unwrap();
        let c = map_rff(&[0.3, 0.4], 2, 0.5, 16, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
