use rand::seq::SliceRandom;
use rand::Rng;

use super::HarnessError;
use crate::forest::Sample;

/// Island shards, the validation records, and the test records.
#[derive(Clone, Debug)]
pub struct DataSplit {
    pub shards: Vec<Vec<Sample>>,
    pub validation: Vec<Sample>,
    pub test: Vec<Sample>,
}

/// Shuffles, keeps the first two thirds for training and the rest as holdout.
///
/// Shards are disjoint slices of the training part. The validation set is a
/// random subset of the holdout; the test set is the whole holdout, or a
/// random subset of `test_size` records when given.
pub fn split_dataset<R: Rng + ?Sized>(
    samples: &[Sample],
    islands: usize,
    shard_size: usize,
    validation_size: usize,
    test_size: Option<usize>,
    rng: &mut R,
) -> Result<DataSplit, HarnessError> {
    if islands == 0 || shard_size == 0 {
        return Err(HarnessError::Config("need at least one island with a non-empty shard".into()));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(rng);
    let training = samples.len() * 2 / 3;
    let (train_idx, holdout_idx) = order.split_at(training);
    if islands * shard_size > training {
        return Err(HarnessError::Config(format!(
            "{islands} shards of {shard_size} do not fit in {training} training records"
        )));
    }
    if validation_size > holdout_idx.len() || test_size.is_some_and(|t| t > holdout_idx.len()) {
        return Err(HarnessError::Config(format!(
            "holdout has only {} records",
            holdout_idx.len()
        )));
    }
    let pick = |idx: &[usize]| idx.iter().map(|&i| samples[i].clone()).collect::<Vec<_>>();
    let shards = (0..islands)
        .map(|i| pick(&train_idx[i * shard_size..(i + 1) * shard_size]))
        .collect();
    let mut holdout = holdout_idx.to_vec();
    holdout.shuffle(rng);
    let validation = pick(&holdout[..validation_size]);
    let test = match test_size {
        Some(n) => {
            let mut chosen = holdout[..].to_vec();
            chosen.shuffle(rng);
            chosen.truncate(n);
            chosen.sort_unstable();
            pick(&chosen)
        }
        None => {
            let mut all = holdout_idx.to_vec();
            all.sort_unstable();
            pick(&all)
        }
    };
    Ok(DataSplit {
        shards,
        validation,
        test,
    })
}
