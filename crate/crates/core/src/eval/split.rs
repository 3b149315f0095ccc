use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EvalError;
use crate::dataset::Dataset;
use crate::prelude::*;

/// Train-side size of a split: `floor(n * frac)`, with a 1e-9 guard so that
/// `n * (2/3)` lands on the integer it denotes.
pub fn train_size(n: usize, train_frac: f64) -> usize {
    libm::floor(n as f64 * train_frac + 1e-9) as usize
}

/// Uniform random partition into `(train, test)`, deterministic per seed.
/// Each side keeps the original row order.
pub fn split(ds: &Dataset, train_frac: f64, seed: u64) -> Result<(Dataset, Dataset), EvalError> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(EvalError::InvalidFraction(train_frac));
    }
    let n = ds.n_rows();
    let n_train = train_size(n, train_frac);
    if n_train == 0 || n_train == n {
        return Err(EvalError::EmptySide {
            rows: n,
            train: n_train,
            test: n - n_train,
        });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (train, test) = idx.split_at_mut(n_train);
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.select_rows(train), ds.select_rows(test)))
}

/// `factor * n` rows drawn uniformly with replacement.
pub fn bootstrap_resample(train: &Dataset, factor: usize, seed: u64) -> Result<Dataset, EvalError> {
    if factor == 0 {
        return Err(EvalError::ZeroFactor);
    }
    let n = train.n_rows();
    if n == 0 {
        return Ok(train.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx: Vec<usize> = (0..factor * n).map(|_| rng.random_range(0..n)).collect();
    Ok(train.select_rows(&idx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DatasetMeta, RowKey};

    fn keyed(n: usize) -> Dataset {
        let keys = (0..n)
            .map(|i| RowKey {
                window_index: i as u64,
                src_addr: format!("h{i}"),
            })
            .collect();
        let meta = DatasetMeta {
            keys,
            ..DatasetMeta::default()
        };
        let values = (0..n).map(|i| i as f64).collect();
        let labels = (0..n).map(|i| (i % 2) as u8).collect();
        Dataset::new(Dataset::generic_names(1), values, labels, meta).unwrap()
    }

    #[test]
    fn sizes_and_partition() {
        let ds = keyed(300);
        let (tr, te) = split(&ds, 2.0 / 3.0, 7).unwrap();
        assert_eq!((tr.n_rows(), te.n_rows()), (200, 100));
        let (tr2, te2) = split(&ds, 0.6667, 7).unwrap();
        assert_eq!((tr2.n_rows(), te2.n_rows()), (200, 100));
        let mut all: Vec<_> = tr.meta.keys.iter().chain(te.meta.keys.iter()).cloned().collect();
        all.sort();
        let mut orig = ds.meta.keys.clone();
        orig.sort();
        assert_eq!(all, orig);
        assert_eq!(split(&ds, 2.0 / 3.0, 7).unwrap(), (tr, te));
        assert_ne!(split(&ds, 2.0 / 3.0, 8).unwrap().0, split(&ds, 2.0 / 3.0, 7).unwrap().0);
    }

    #[test]
    fn split_errors() {
        let ds = keyed(2);
        assert!(matches!(split(&ds, 0.0, 1), Err(EvalError::InvalidFraction(_))));
        assert!(matches!(split(&ds, 1.0, 1), Err(EvalError::InvalidFraction(_))));
        assert!(matches!(split(&ds, 0.2, 1), Err(EvalError::EmptySide { .. })));
    }

    #[test]
    fn bootstrap_members() {
        let ds = keyed(100);
        let b = bootstrap_resample(&ds, 10, 3).unwrap();
        assert_eq!(b.n_rows(), 1000);
        for (row, key) in b.rows().zip(&b.meta.keys) {
            assert_eq!(row[0], key.window_index as f64);
        }
        assert_eq!(bootstrap_resample(&ds, 1, 3).unwrap().n_rows(), 100);
        assert_eq!(bootstrap_resample(&ds, 0, 3), Err(EvalError::ZeroFactor));
    }
}
