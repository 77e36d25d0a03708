//! One independent L2-regularised logistic classifier per hour.
//!
//! Features are standardised with training-set statistics, weights start
//! at zero, and full-batch gradient descent runs a fixed number of epochs
//! on the mean cross-entropy plus `l2/2 * ||w||^2` (the bias is not
//! regularised). Hours that never vary in training collapse to constant
//! predictors. Prediction switches an hour on when its probability
//! exceeds one half; exactly one half stays off.

use serde::{Deserialize, Serialize};

use crate::model::Schedule;

use super::dataset::LabeledDataset;

/// Knobs of the per-hour logistic classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticHyper {
    /// L2 penalty on the weights (not the bias).
    pub l2: f64,
    /// Gradient-descent step size.
    pub lr: f64,
    /// Full-batch epochs.
    pub epochs: usize,
}

impl Default for LogisticHyper {
    fn default() -> Self {
        Self { l2: 1e-3, lr: 0.5, epochs: 100 }
    }
}

/// Per-hour classifier: degenerate hours become constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HourModel {
    Constant(bool),
    Linear { w: Vec<f64>, b: f64 },
}

/// All 24 hour classifiers plus the feature standardisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub hyper: LogisticHyper,
    feat_mean: Vec<f64>,
    feat_std: Vec<f64>,
    hours: Vec<HourModel>,
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean cross-entropy of a single hour's classifier plus the L2 term,
/// with its exact gradient in (w, b).
///
/// This is the objective the trainer descends, exposed so the analytic
/// gradient can be checked against finite differences.
pub fn loss_and_grad(
    xs: &[Vec<f64>],
    ys: &[f64],
    w: &[f64],
    b: f64,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let m = xs.len() as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; w.len()];
    let mut grad_b = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let z = b + w.iter().zip(x).map(|(wk, xk)| wk * xk).sum::<f64>();
        loss += softplus(z) - y * z;
        let r = sigmoid(z) - y;
        for (gk, xk) in grad_w.iter_mut().zip(x) {
            *gk += r * xk;
        }
        grad_b += r;
    }
    loss = loss / m + 0.5 * l2 * w.iter().map(|wk| wk * wk).sum::<f64>();
    for (gk, wk) in grad_w.iter_mut().zip(w) {
        *gk = *gk / m + l2 * wk;
    }
    (loss, grad_w, grad_b / m)
}

impl LogisticModel {
    /// Trains all hour classifiers on the given training rows.
    ///
    /// All non-degenerate hours are descended in one fused pass per epoch;
    /// the updates are exactly those of per-hour gradient descent on
    /// [`loss_and_grad`], row order and all.
    pub fn train(ds: &LabeledDataset, train: &[usize], hyper: LogisticHyper) -> Self {
        let d = ds.dim();
        let h = ds.horizon();
        let m = train.len();
        let (feat_mean, feat_std) = standardisation(ds, train);
        let xs: Vec<Vec<f64>> = train
            .iter()
            .map(|&i| standardise(ds.input(i), &feat_mean, &feat_std))
            .collect();

        // Hours with both classes present train; the rest are constants.
        let mut on_counts = vec![0usize; h];
        for &i in train {
            for (t, c) in on_counts.iter_mut().enumerate() {
                if ds.target(i).bit(t) {
                    *c += 1;
                }
            }
        }
        let active: Vec<usize> = (0..h)
            .filter(|&t| on_counts[t] > 0 && on_counts[t] < m)
            .collect();

        let mut w = vec![vec![0.0; d]; active.len()];
        let mut b = vec![0.0; active.len()];
        let mut grad_w = vec![vec![0.0; d]; active.len()];
        let mut grad_b = vec![0.0; active.len()];
        for _ in 0..hyper.epochs {
            for g in grad_w.iter_mut() {
                g.iter_mut().for_each(|v| *v = 0.0);
            }
            grad_b.iter_mut().for_each(|v| *v = 0.0);
            for (row, &i) in xs.iter().zip(train) {
                for (a, &t) in active.iter().enumerate() {
                    let z = b[a] + w[a].iter().zip(row).map(|(wk, xk)| wk * xk).sum::<f64>();
                    let y = if ds.target(i).bit(t) { 1.0 } else { 0.0 };
                    let r = sigmoid(z) - y;
                    for (gk, xk) in grad_w[a].iter_mut().zip(row) {
                        *gk += r * xk;
                    }
                    grad_b[a] += r;
                }
            }
            let m_f = m as f64;
            for a in 0..active.len() {
                for k in 0..d {
                    w[a][k] -= hyper.lr * (grad_w[a][k] / m_f + hyper.l2 * w[a][k]);
                }
                b[a] -= hyper.lr * (grad_b[a] / m_f);
            }
        }

        let mut hours = Vec::with_capacity(h);
        let mut next_active = 0usize;
        for &c in &on_counts {
            if c == 0 {
                hours.push(HourModel::Constant(false));
            } else if c == m {
                hours.push(HourModel::Constant(true));
            } else {
                hours.push(HourModel::Linear {
                    w: w[next_active].clone(),
                    b: b[next_active],
                });
                next_active += 1;
            }
        }
        Self { hyper, feat_mean, feat_std, hours }
    }

    pub fn predict(&self, input: &[f64]) -> Schedule {
        let row = standardise(input, &self.feat_mean, &self.feat_std);
        let bits = self
            .hours
            .iter()
            .map(|hm| match hm {
                HourModel::Constant(bit) => *bit,
                HourModel::Linear { w, b } => {
                    // p > 0.5 is exactly z > 0; a coin-flip hour stays off.
                    b + w.iter().zip(&row).map(|(wk, xk)| wk * xk).sum::<f64>() > 0.0
                }
            })
            .collect();
        Schedule::new(bits).expect("model horizon is valid")
    }

    pub fn hour(&self, t: usize) -> &HourModel {
        &self.hours[t]
    }

    pub fn feat_mean(&self) -> &[f64] {
        &self.feat_mean
    }

    pub fn feat_std(&self) -> &[f64] {
        &self.feat_std
    }
}

/// Training-set feature means and spreads; constant features get spread 1
/// so standardising them yields exactly zero.
fn standardisation(ds: &LabeledDataset, train: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let d = ds.dim();
    let m = train.len() as f64;
    let mut mean = vec![0.0; d];
    for &i in train {
        for (s, v) in mean.iter_mut().zip(ds.input(i)) {
            *s += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m);
    let mut var = vec![0.0; d];
    for &i in train {
        for (k, v) in ds.input(i).iter().enumerate() {
            var[k] += (v - mean[k]) * (v - mean[k]);
        }
    }
    let std = var
        .into_iter()
        .map(|v| {
            let s = (v / m).sqrt();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    (mean, std)
}

fn standardise(x: &[f64], mean: &[f64], std: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(mean.iter().zip(std))
        .map(|(v, (m, s))| (v - m) / s)
        .collect()
}
