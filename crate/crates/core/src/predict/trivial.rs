//! Marginal baseline: ignore the demand, flip per-hour coins.
//!
//! The model memorises how often each hour is on in the training targets
//! and predicts by sampling each hour independently with that frequency.
//! Any model worth using must beat it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::Schedule;

use super::dataset::LabeledDataset;

/// Per-hour on-frequencies from the training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrivialModel {
    p: Vec<f64>,
}

impl TrivialModel {
    /// Estimates the per-hour on-frequency over the given training rows.
    pub fn train(ds: &LabeledDataset, train: &[usize]) -> Self {
        let h = ds.horizon();
        let mut p = vec![0.0; h];
        for &i in train {
            for (t, slot) in p.iter_mut().enumerate() {
                if ds.target(i).bit(t) {
                    *slot += 1.0;
                }
            }
        }
        for slot in &mut p {
            *slot /= train.len().max(1) as f64;
        }
        Self { p }
    }

    /// Builds the model directly from frequencies, for tests and tooling.
    pub fn from_frequencies(p: Vec<f64>) -> Self {
        Self { p }
    }

    /// Training-set on-frequency per hour.
    pub fn frequencies(&self) -> &[f64] {
        &self.p
    }

    /// Samples one schedule; the draw order is hour 0 first.
    pub fn predict(&self, rng: &mut impl Rng) -> Schedule {
        let bits = self.p.iter().map(|&p| rng.random::<f64>() < p).collect();
        Schedule::new(bits).expect("model horizon is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predict::hamming_distance;
    use crate::rng::stream;

    #[test]
    fn constant_targets_are_reproduced_exactly() {
        let inputs = vec![vec![1.0]; 10];
        let targets = vec![Schedule::decode(0b0110, 4).unwrap(); 10];
        let ds = LabeledDataset::new(inputs, targets.clone()).unwrap();
        let idx: Vec<usize> = (0..10).collect();
        let model = TrivialModel::train(&ds, &idx);
        assert_eq!(model.frequencies(), &[0.0, 1.0, 1.0, 0.0]);
        let mut rng = stream(1, 0);
        for _ in 0..5 {
            let s = model.predict(&mut rng);
            assert_eq!(hamming_distance(&s, &targets[0]).unwrap(), 0);
        }
    }

    #[test]
    fn coin_flip_model_misses_half_the_hours_on_average() {
        // Against any truth, a fair coin per hour is wrong with
        // probability one half: 12 of 24 hours in expectation.
        let model = TrivialModel::from_frequencies(vec![0.5; 24]);
        let truth = Schedule::decode(0b1010_1111_0000_1100_1010_0101, 24).unwrap();
        let n = 4000;
        let mut total = 0usize;
        for i in 0..n {
            let mut rng = stream(42, i);
            total += hamming_distance(&model.predict(&mut rng), &truth).unwrap();
        }
        let mean = total as f64 / n as f64;
        assert!((mean - 12.0).abs() < 0.25, "mean Hamming {mean}");
    }
}
