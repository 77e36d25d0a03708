//! Bagged ensemble of multi-output trees with per-node feature sampling.
//!
//! Tree `i` draws everything it needs from `rng::stream(seed, i)`: first
//! the bootstrap resample of the training rows, then the feature subsets
//! while growing. Per-stream seeding keeps the forest identical no matter
//! how the trees are scheduled across threads. Prediction is a per-hour
//! majority vote over the trees, with exact ties resolving to off.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::Schedule;
use crate::rng::stream;

use super::dataset::LabeledDataset;
use super::tree::{TreeHyper, TreeModel};

/// Ensemble shape and per-tree limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestHyper {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub num_trees: usize,
    /// Features drawn per node; values at or above the feature count use
    /// every feature and consume no randomness while growing.
    pub m_try: usize,
    /// Resample the training rows with replacement per tree. Turning this
    /// off together with a saturating `m_try` makes a one-tree forest
    /// bit-identical to a plain tree, which pins the shared grower.
    pub bootstrap: bool,
}

impl Default for ForestHyper {
    fn default() -> Self {
        // m_try 5 is the rounded-up square root of the 24 demand features.
        Self { max_depth: 10, min_leaf: 5, num_trees: 100, m_try: 5, bootstrap: true }
    }
}

impl ForestHyper {
    fn tree_hyper(&self) -> TreeHyper {
        TreeHyper { max_depth: self.max_depth, min_leaf: self.min_leaf }
    }
}

/// A trained forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub hyper: ForestHyper,
    pub seed: u64,
    horizon: usize,
    trees: Vec<TreeModel>,
}

impl ForestModel {
    pub fn train(ds: &LabeledDataset, train: &[usize], hyper: ForestHyper, seed: u64) -> Self {
        let masks = ds.target_masks();
        let trees: Vec<TreeModel> = (0..hyper.num_trees)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(seed, i as u64);
                let rows: Vec<usize> = if hyper.bootstrap {
                    (0..train.len())
                        .map(|_| train[rng.random_range(0..train.len())])
                        .collect()
                } else {
                    train.to_vec()
                };
                TreeModel::grow(ds, &masks, rows, hyper.tree_hyper(), Some((&mut rng, hyper.m_try)))
            })
            .collect();
        ForestModel { hyper, seed, horizon: ds.horizon(), trees }
    }

    pub fn predict(&self, input: &[f64]) -> Schedule {
        let mut votes = vec![0usize; self.horizon];
        for tree in &self.trees {
            let mut mask = tree.predict_mask(input);
            while mask != 0 {
                votes[mask.trailing_zeros() as usize] += 1;
                mask &= mask - 1;
            }
        }
        let mask = votes
            .iter()
            .enumerate()
            .filter(|&(_, &v)| 2 * v > self.trees.len())
            .fold(0u32, |acc, (t, _)| acc | 1 << t);
        Schedule::decode(mask, self.horizon).expect("vote mask is valid for the horizon")
    }

    pub fn trees(&self) -> &[TreeModel] {
        &self.trees
    }
}
