//! Multi-output decision tree: one tree predicts all 24 hour bits.
//!
//! Split quality is the summed per-hour binary Gini impurity, weighted by
//! side size and computed incrementally while sweeping each candidate
//! feature in sorted order. Thresholds sit midway between adjacent
//! distinct values. A node splits only on a strict impurity decrease and
//! only where both sides keep `min_leaf` samples; leaves predict the
//! per-hour majority, with exact ties resolving to off.
//!
//! Score ties resolve to the lowest feature index, then the lowest
//! threshold, because candidates are scanned in exactly that order and
//! replaced only on strict improvement.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::Schedule;

use super::dataset::LabeledDataset;

/// Depth and leaf-size limits of one tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeHyper {
    /// Maximum number of splits on any root-to-leaf path.
    pub max_depth: usize,
    /// Minimum training samples on each side of every split.
    pub min_leaf: usize,
}

impl Default for TreeHyper {
    fn default() -> Self {
        Self { max_depth: 10, min_leaf: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        /// Majority schedule of the node's training samples, encoded.
        mask: u32,
    },
}

/// A trained tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub hyper: TreeHyper,
    horizon: usize,
    dim: usize,
    nodes: Vec<Node>,
}

impl TreeModel {
    /// Grows a tree on the given training rows using every feature.
    pub fn train(ds: &LabeledDataset, train: &[usize], hyper: TreeHyper) -> Self {
        let masks = ds.target_masks();
        Self::grow(ds, &masks, train.to_vec(), hyper, None)
    }

    /// Grows a tree, optionally drawing a random feature subset of size
    /// `m_try` per node from `rng`. Subsets smaller than the full feature
    /// count are sampled without replacement and scanned in ascending
    /// order; `m_try >= dim` uses all features and consumes no randomness.
    pub(crate) fn grow(
        ds: &LabeledDataset,
        masks: &[u32],
        root: Vec<usize>,
        hyper: TreeHyper,
        feature_rng: Option<(&mut ChaCha8Rng, usize)>,
    ) -> Self {
        let mut grower = Grower { ds, masks, hyper, nodes: Vec::new(), feature_rng };
        grower.build(root, 0);
        TreeModel {
            hyper,
            horizon: ds.horizon(),
            dim: ds.dim(),
            nodes: grower.nodes,
        }
    }

    pub(crate) fn predict_mask(&self, input: &[f64]) -> u32 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { mask } => return *mask,
                Node::Split { feature, threshold, left, right } => {
                    at = if input[*feature] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn predict(&self, input: &[f64]) -> Schedule {
        Schedule::decode(self.predict_mask(input), self.horizon)
            .expect("leaf masks are valid for the horizon")
    }

    /// Number of nodes, splits and leaves together.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// The node array; index 0 is the root.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }
}

struct Grower<'a> {
    ds: &'a LabeledDataset,
    masks: &'a [u32],
    hyper: TreeHyper,
    nodes: Vec<Node>,
    feature_rng: Option<(&'a mut ChaCha8Rng, usize)>,
}

/// Per-side sweep state: per-hour on-counts plus the running sums needed
/// to evaluate the summed Gini in O(1) per candidate.
struct SideCounts {
    per_hour: Vec<u64>,
    n: u64,
    sum: u64,
    sum_sq: u64,
}

impl SideCounts {
    fn empty(h: usize) -> Self {
        Self { per_hour: vec![0; h], n: 0, sum: 0, sum_sq: 0 }
    }

    fn of(masks: &[u32], idx: &[usize], h: usize) -> Self {
        let mut side = Self::empty(h);
        for &i in idx {
            side.add(masks[i]);
        }
        side
    }

    fn add(&mut self, mask: u32) {
        let mut m = mask;
        while m != 0 {
            let t = m.trailing_zeros() as usize;
            self.sum_sq += 2 * self.per_hour[t] + 1;
            self.per_hour[t] += 1;
            self.sum += 1;
            m &= m - 1;
        }
        self.n += 1;
    }

    fn remove(&mut self, mask: u32) {
        let mut m = mask;
        while m != 0 {
            let t = m.trailing_zeros() as usize;
            self.sum_sq -= 2 * self.per_hour[t] - 1;
            self.per_hour[t] -= 1;
            self.sum -= 1;
            m &= m - 1;
        }
        self.n -= 1;
    }

    /// Side size times the summed per-hour Gini impurity:
    /// `n * sum_h 2 p_h (1 - p_h)` evaluated exactly from integer counts.
    fn weighted_gini(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        2.0 * (self.sum as f64 * self.n as f64 - self.sum_sq as f64) / self.n as f64
    }

    fn is_pure(&self) -> bool {
        self.per_hour.iter().all(|&c| c == 0 || c == self.n)
    }

    fn majority_mask(&self) -> u32 {
        self.per_hour
            .iter()
            .enumerate()
            .filter(|&(_, &c)| 2 * c > self.n)
            .fold(0u32, |acc, (t, _)| acc | 1 << t)
    }
}

impl Grower<'_> {
    fn build(&mut self, idx: Vec<usize>, depth: usize) -> u32 {
        let id = self.nodes.len() as u32;
        self.nodes.push(Node::Leaf { mask: 0 });

        let h = self.ds.horizon();
        let totals = SideCounts::of(self.masks, &idx, h);
        let splittable = depth < self.hyper.max_depth
            && idx.len() >= 2 * self.hyper.min_leaf
            && !totals.is_pure();

        if let Some((feature, threshold)) = splittable
            .then(|| self.best_split(&idx, &totals))
            .flatten()
        {
            let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
                .iter()
                .partition(|&&i| self.ds.input(i)[feature] <= threshold);
            // Adjacent float values can make the midpoint collapse onto a
            // side; an empty side means there is nothing to split.
            if !left_idx.is_empty() && !right_idx.is_empty() {
                let left = self.build(left_idx, depth + 1);
                let right = self.build(right_idx, depth + 1);
                self.nodes[id as usize] = Node::Split { feature, threshold, left, right };
                return id;
            }
        }

        self.nodes[id as usize] = Node::Leaf { mask: totals.majority_mask() };
        id
    }

    /// Scans candidate features in ascending order and returns the
    /// strictly best (feature, threshold), if any beats the parent.
    fn best_split(&mut self, idx: &[usize], totals: &SideCounts) -> Option<(usize, f64)> {
        let d = self.ds.dim();
        let h = self.ds.horizon();
        let n = idx.len();
        let features: Vec<usize> = match &mut self.feature_rng {
            Some((rng, m_try)) if *m_try < d => {
                let mut pool: Vec<usize> = (0..d).collect();
                for i in 0..*m_try {
                    let j = rng.random_range(i..d);
                    pool.swap(i, j);
                }
                let mut chosen = pool[..*m_try].to_vec();
                chosen.sort_unstable();
                chosen
            }
            _ => (0..d).collect(),
        };

        let parent_score = totals.weighted_gini();
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order: Vec<usize> = Vec::with_capacity(n);
        for feature in features {
            order.clear();
            order.extend_from_slice(idx);
            order.sort_unstable_by(|&a, &b| {
                self.ds.input(a)[feature].total_cmp(&self.ds.input(b)[feature])
            });

            let mut left = SideCounts::empty(h);
            let mut right = SideCounts::of(self.masks, idx, h);
            for pos in 0..n - 1 {
                let mask = self.masks[order[pos]];
                left.add(mask);
                right.remove(mask);
                if left.n < self.hyper.min_leaf as u64 || right.n < self.hyper.min_leaf as u64 {
                    continue;
                }
                let v = self.ds.input(order[pos])[feature];
                let v_next = self.ds.input(order[pos + 1])[feature];
                if v == v_next {
                    continue;
                }
                let score = left.weighted_gini() + right.weighted_gini();
                if score < parent_score && best.is_none_or(|(bs, _, _)| score < bs) {
                    best = Some((score, feature, 0.5 * (v + v_next)));
                }
            }
        }
        best.map(|(_, feature, threshold)| (feature, threshold))
    }
}
