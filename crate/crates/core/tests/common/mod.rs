//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use botflow_core::Dataset;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `(tp, fp, fn, tn)` by explicit enumeration.
pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> (u64, u64, u64, u64) {
    let count = |t: u8, p: u8| y_true.iter().zip(y_pred).filter(|&(&a, &b)| a == t && b == p).count() as u64;
    (count(1, 1), count(0, 1), count(1, 0), count(0, 0))
}

/// Nearest f64 of a reduced fraction; both parts are exact below 2^53.
fn to_f64(r: Ratio<u64>) -> f64 {
    if *r.denom() == 0 {
        return 0.0;
    }
    *r.numer() as f64 / *r.denom() as f64
}

/// Precision, recall and f1 from rational arithmetic; 0/0 reads as 0.
pub fn prf_oracle(y_true: &[u8], y_pred: &[u8]) -> (f64, f64, f64) {
    let (tp, fp, fn_, _) = confusion(y_true, y_pred);
    let frac = |n: u64, d: u64| if d == 0 { Ratio::new(0, 1) } else { Ratio::new(n, d) };
    let p = frac(tp, tp + fp);
    let r = frac(tp, tp + fn_);
    let f1 = if p + r == Ratio::new(0, 1) {
        Ratio::new(0, 1)
    } else {
        Ratio::new(2, 1) * p * r / (p + r)
    };
    (to_f64(p), to_f64(r), to_f64(f1))
}

/// Weighted Gini impurity of a two-way partition, exactly:
/// `sum_side n_side * (1 - sum_c p_c^2)`.
fn partition_gini(left: (i64, i64), right: (i64, i64)) -> Ratio<i64> {
    let side = |(a, b): (i64, i64)| {
        let n = a + b;
        if n == 0 {
            Ratio::new(0, 1)
        } else {
            Ratio::new(n * n - a * a - b * b, n)
        }
    };
    side(left) + side(right)
}

/// Exhaustive best single split of 1-D labelled data: the midpoint between
/// consecutive distinct values with the lowest weighted Gini, ties to the
/// lowest threshold. `None` when all values coincide.
pub fn best_gini_midpoint(x: &[f64], y: &[u8]) -> Option<f64> {
    let mut values: Vec<f64> = x.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mut best: Option<(Ratio<i64>, f64)> = None;
    for w in values.windows(2) {
        let t = (w[0] + w[1]) / 2.0;
        let mut left = (0, 0);
        let mut right = (0, 0);
        for (&xi, &yi) in x.iter().zip(y) {
            let side = if xi <= t { &mut left } else { &mut right };
            if yi == 1 {
                side.0 += 1;
            } else {
                side.1 += 1;
            }
        }
        let g = partition_gini(left, right);
        if best.as_ref().is_none_or(|(bg, _)| g < *bg) {
            best = Some((g, t));
        }
    }
    best.map(|(_, t)| t)
}

/// Shannon entropy over `ln(m)` written with base-2 logarithms.
pub fn entropy_ru_oracle(counts: &[u64]) -> f64 {
    let m = counts.len();
    if m <= 1 {
        return 0.0;
    }
    let total: u64 = counts.iter().sum();
    let h2: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.log2()
        })
        .sum();
    h2 / (m as f64).log2()
}

/// Random dataset with `d` features in `[-1, 1)` and labels from `label`.
pub fn random_dataset(seed: u64, n: usize, d: usize, label: impl Fn(&[f64]) -> u8) -> Dataset {
    let mut r = rng(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| r.random_range(-1.0..1.0)).collect())
        .collect();
    let labels = rows.iter().map(|x| label(x)).collect();
    Dataset::from_rows(Dataset::generic_names(d), &rows, labels).unwrap()
}

/// Eigen-decomposition of the standardized (population) covariance with
/// nalgebra; eigenpairs sorted by descending eigenvalue.
pub fn standardized_eigen(ds: &Dataset) -> (Vec<f64>, Vec<Vec<f64>>) {
    let (n, d) = (ds.n_rows(), ds.n_features());
    let mut z = nalgebra::DMatrix::<f64>::zeros(n, d);
    for j in 0..d {
        let col = ds.column(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        for i in 0..n {
            z[(i, j)] = (col[i] - mean) / sd;
        }
    }
    let cov = z.transpose() * &z / n as f64;
    let eig = nalgebra::SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (values, vectors)
}
