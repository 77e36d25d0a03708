//! Supervised dataset: demand profiles in, optimal schedules out.

use rand::seq::SliceRandom;

use crate::error::Error;
use crate::model::Schedule;
use crate::rng::stream;
use crate::Result;

/// Feature rows (one demand day each) paired with the schedules an exact
/// solver produced for them.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    inputs: Vec<Vec<f64>>,
    targets: Vec<Schedule>,
    horizon: usize,
    dim: usize,
}

impl LabeledDataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<Schedule>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::EmptyInput { what: "dataset inputs" });
        }
        if inputs.len() != targets.len() {
            return Err(Error::LengthMismatch {
                what: "dataset targets",
                expected: inputs.len(),
                got: targets.len(),
            });
        }
        let dim = inputs[0].len();
        if dim == 0 {
            return Err(Error::InvalidDataset("feature rows are empty".into()));
        }
        for (i, row) in inputs.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvalidDataset(format!(
                    "feature row {i} has {} values, expected {dim}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!(
                    "feature row {i} has non-finite value {v}"
                )));
            }
        }
        let horizon = targets[0].horizon();
        for (i, t) in targets.iter().enumerate() {
            if t.horizon() != horizon {
                return Err(Error::InvalidDataset(format!(
                    "target {i} has horizon {}, expected {horizon}",
                    t.horizon()
                )));
            }
        }
        Ok(Self { inputs, targets, horizon, dim })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Feature dimension of every row.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Horizon of every target schedule.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i]
    }

    pub fn target(&self, i: usize) -> &Schedule {
        &self.targets[i]
    }

    /// Targets as bit masks, for counting-heavy training loops.
    pub fn target_masks(&self) -> Vec<u32> {
        self.targets.iter().map(Schedule::encode).collect()
    }
}

/// Index sets of a train/validation/test split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Smallest dataset the 70/15/15 split leaves no part empty for.
pub const MIN_SPLIT_SIZE: usize = 7;

/// Shuffles `0..n` with the stream keyed by `seed` and cuts 70 percent
/// for training, 15 for validation, and the remainder for testing.
///
/// The same `(n, seed)` always yields the same split, independent of
/// everything else that consumed randomness.
pub fn split_indices(n: usize, seed: u64) -> Result<SplitIndices> {
    if n < MIN_SPLIT_SIZE {
        return Err(Error::DatasetTooSmall {
            what: "train/val/test",
            n,
            min: MIN_SPLIT_SIZE,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(seed, 0));
    let n_train = (0.7 * n as f64).floor() as usize;
    let n_val = (0.15 * n as f64).floor() as usize;
    Ok(SplitIndices {
        train: order[..n_train].to_vec(),
        val: order[n_train..n_train + n_val].to_vec(),
        test: order[n_train + n_val..].to_vec(),
    })
}
