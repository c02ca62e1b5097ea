//! Seeded train/test splitting of task indices.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, GLOBAL_STREAM};

/// Splits the task indices `0..n_tasks` into disjoint `(train, test)` sets.
///
/// The test set holds `round(n_tasks * test_fraction)` tasks chosen uniformly
/// at random under `seed`; both returned index lists are sorted ascending.
/// Rounding is clamped so neither side is empty.
pub fn train_test_split(
    n_tasks: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if n_tasks < 2 {
        return Err(Error::InvalidConfig(format!(
            "cannot split {n_tasks} task(s) into non-empty train and test sets"
        )));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test_fraction must lie strictly between 0 and 1, got {test_fraction}"
        )));
    }
    let n_test = ((n_tasks as f64) * test_fraction).round() as usize;
    let n_test = n_test.clamp(1, n_tasks - 1);

    let mut order: Vec<usize> = (0..n_tasks).collect();
    order.shuffle(&mut stream_rng(seed, GLOBAL_STREAM));
    let mut test: Vec<usize> = order[..n_test].to_vec();
    let mut train: Vec<usize> = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_follow_rounding() {
        let (train, test) = train_test_split(10, 0.6, 1).unwrap();
        assert_eq!(test.len(), 6);
        assert_eq!(train.len(), 4);
    }

    #[test]
    fn split_is_a_disjoint_cover() {
        let (train, test) = train_test_split(101, 0.33, 9).unwrap();
        let mut all: Vec<usize> = train.iter().chain(test.iter()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..101).collect::<Vec<_>>());
    }

    #[test]
    fn same_seed_same_split() {
        assert_eq!(train_test_split(50, 0.4, 3).unwrap(), train_test_split(50, 0.4, 3).unwrap());
    }

    #[test]
    fn different_seeds_differ() {
        assert_ne!(train_test_split(50, 0.4, 3).unwrap(), train_test_split(50, 0.4, 4).unwrap());
    }

    #[test]
    fn degenerate_fractions_rejected() {
        assert!(train_test_split(10, 0.0, 1).is_err());
        assert!(train_test_split(10, 1.0, 1).is_err());
        assert!(train_test_split(1, 0.5, 1).is_err());
    }

    #[test]
    fn neither_side_empty_even_under_extreme_rounding() {
        let (train, test) = train_test_split(10, 0.01, 1).unwrap();
        assert_eq!(test.len(), 1);
        assert_eq!(train.len(), 9);
        let (train, test) = train_test_split(10, 0.99, 1).unwrap();
        assert_eq!(test.len(), 9);
        assert_eq!(train.len(), 1);
    }
}
