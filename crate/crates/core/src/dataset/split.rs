use rand::seq::index::sample;

use super::{Dataset, Split};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Uniformly random test set of `n_test` rows, then a random validation share
/// of what remains.
pub fn split_random(mut ds: Dataset, n_test: usize, val_frac: f64, seed: u64) -> Result<Dataset> {
    let n = ds.len();
    if n_test >= n {
        return Err(Error::Split(format!("test size {n_test} must be smaller than dataset size {n}")));
    }
    if !(0.0..1.0).contains(&val_frac) {
        return Err(Error::Split(format!("validation fraction {val_frac} outside [0, 1)")));
    }
    let mut rng = stream_rng(seed, 0);
    let mut in_test = vec![false; n];
    let mut test: Vec<usize> = sample(&mut rng, n, n_test).into_vec();
    test.iter().for_each(|&i| in_test[i] = true);
    test.sort_unstable();

    let remaining: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
    let n_val = (val_frac * remaining.len() as f64).round() as usize;
    let mut in_val = vec![false; remaining.len()];
    sample(&mut rng, remaining.len(), n_val).into_iter().for_each(|j| in_val[j] = true);

    let (mut val, mut train) = (Vec::with_capacity(n_val), Vec::new());
    for (j, &i) in remaining.iter().enumerate() {
        if in_val[j] {
            val.push(i);
        } else {
            train.push(i);
        }
    }
    ds.split = Split { train, val, test };
    Ok(ds)
}

/// Time-ordered split: the last `n_test` rows are test, the `n_val` rows
/// before them validation, everything earlier training.
pub fn split_temporal(mut ds: Dataset, n_test: usize, n_val: usize) -> Result<Dataset> {
    let n = ds.len();
    if n_test + n_val >= n {
        return Err(Error::Split(format!(
            "test ({n_test}) + validation ({n_val}) must be smaller than dataset size {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| ds.observations[i].t);
    let n_train = n - n_test - n_val;
    let mut train = order[..n_train].to_vec();
    let mut val = order[n_train..n_train + n_val].to_vec();
    let mut test = order[n_train + n_val..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    ds.split = Split { train, val, test };
    Ok(ds)
}
