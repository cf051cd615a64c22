use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, DatasetError};

/// Random train/test partition. `round(fraction * n)` records go to the
/// training side; both sides keep the original record order.
pub fn split(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DatasetError> {
    let (train, test) = split_indices(dataset.len(), train_fraction, seed)?;
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), DatasetError> {
    if n < 2 {
        return Err(DatasetError::Split(format!("need at least 2 records, have {n}")));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::Split(format!(
            "train fraction {train_fraction} not in (0, 1)"
        )));
    }
    let n_train = (train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(DatasetError::Split(format!(
            "fraction {train_fraction} of {n} records leaves one side empty"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sizes_and_determinism() {
        let (a, b) = split_indices(10, 0.8, 3).unwrap();
        assert_eq!((a.len(), b.len()), (8, 2));
        assert_eq!(split_indices(10, 0.8, 3).unwrap(), (a, b));
    }

    #[test]
    fn different_seeds_differ() {
        let (a, _) = split_indices(100, 0.5, 1).unwrap();
        let (b, _) = split_indices(100, 0.5, 2).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn degenerate_fractions() {
        assert!(split_indices(1, 0.5, 0).is_err());
        assert!(split_indices(10, 0.01, 0).is_err());
        assert!(split_indices(10, 0.99, 0).is_err());
        assert!(split_indices(10, 1.0, 0).is_err());
        assert!(split_indices(10, 0.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn partitions(n in 2usize..200, frac in 0.05f64..0.95, seed in any::<u64>()) {
            if let Ok((train, test)) = split_indices(n, frac, seed) {
                let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
                prop_assert_eq!(train.len(), (frac * n as f64).round() as usize);
            }
        }
    }
}
