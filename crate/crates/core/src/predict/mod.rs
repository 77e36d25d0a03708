//! Schedule predictors: map a day's 24-hour demand forecast directly to
//! an on/off schedule, skipping the solver at prediction time.
//!
//! Four model families share one interface. The trivial baseline redraws
//! each hour from its training frequency and anchors the error scale;
//! per-hour logistic classifiers, a multi-output tree, and a bagged
//! forest learn the demand-to-schedule map. Accuracy is the mean Hamming
//! distance between predicted and optimal schedules: the average number
//! of hours out of 24 switched wrongly.
//!
//! Everything stochastic (splits, the trivial baseline's coins, forest
//! resampling) draws from dedicated counter-derived streams, so results
//! depend only on the seeds, never on thread scheduling or evaluation
//! order.

pub mod dataset;
pub mod forest;
pub mod logistic;
pub mod tree;
pub mod trivial;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::Schedule;
use crate::rng::{hash64, stream};
use crate::{Error, Result};

pub use dataset::{split_indices, LabeledDataset, SplitIndices, MIN_SPLIT_SIZE};
pub use forest::{ForestHyper, ForestModel};
pub use logistic::{loss_and_grad, HourModel, LogisticHyper, LogisticModel};
pub use tree::{Node, TreeHyper, TreeModel};
pub use trivial::TrivialModel;

/// The four predictor families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Trivial,
    Logistic,
    Tree,
    Forest,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ModelKind::Trivial => "trivial",
            ModelKind::Logistic => "logistic",
            ModelKind::Tree => "tree",
            ModelKind::Forest => "forest",
        };
        f.write_str(name)
    }
}

/// Any trained predictor behind one prediction call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PredictorModel {
    Trivial(TrivialModel),
    Logistic(LogisticModel),
    Tree(TreeModel),
    Forest(ForestModel),
}

impl PredictorModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            PredictorModel::Trivial(_) => ModelKind::Trivial,
            PredictorModel::Logistic(_) => ModelKind::Logistic,
            PredictorModel::Tree(_) => ModelKind::Tree,
            PredictorModel::Forest(_) => ModelKind::Forest,
        }
    }

    /// Predicts a schedule for one demand profile. Only the trivial
    /// baseline consumes randomness; the learned models ignore `rng`.
    pub fn predict(&self, input: &[f64], rng: &mut impl Rng) -> Schedule {
        match self {
            PredictorModel::Trivial(m) => m.predict(rng),
            PredictorModel::Logistic(m) => m.predict(input),
            PredictorModel::Tree(m) => m.predict(input),
            PredictorModel::Forest(m) => m.predict(input),
        }
    }
}

/// Number of hours where the two schedules disagree.
pub fn hamming_distance(a: &Schedule, b: &Schedule) -> Result<usize> {
    if a.horizon() != b.horizon() {
        return Err(Error::MixedHorizons { expected: a.horizon(), got: b.horizon() });
    }
    Ok((a.encode() ^ b.encode()).count_ones() as usize)
}

/// Mean Hamming distance of `model` over the given dataset rows.
///
/// Each row is predicted with its own stream keyed by `(eval_seed, row)`,
/// so the result is identical however the rows are ordered or batched.
/// The mean is an exact integer sum divided once, immune to float
/// reassociation under parallel evaluation.
pub fn hamming_eval(
    model: &PredictorModel,
    ds: &LabeledDataset,
    indices: &[usize],
    eval_seed: u64,
) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::EmptyInput { what: "evaluation indices" });
    }
    let distances: Vec<usize> = indices
        .par_iter()
        .map(|&i| {
            let mut rng = stream(eval_seed, i as u64);
            hamming_distance(&model.predict(ds.input(i), &mut rng), ds.target(i))
        })
        .collect::<Result<_>>()?;
    Ok(distances.iter().sum::<usize>() as f64 / indices.len() as f64)
}

/// Candidate hyperparameters swept by [`select_hyperparams`].
///
/// The defaults keep a single-machine sweep affordable on large datasets;
/// widen the vectors for a finer search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub logistic_l2: Vec<f64>,
    pub logistic_lr: f64,
    pub logistic_epochs: usize,
    pub tree_depths: Vec<usize>,
    pub forest_depths: Vec<usize>,
    pub forest_trees: Vec<usize>,
    pub min_leaf: usize,
    /// Features sampled per forest node; saturates at the feature count.
    pub m_try: usize,
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            logistic_l2: vec![0.0, 1e-3, 1e-1],
            logistic_lr: 0.5,
            logistic_epochs: 100,
            tree_depths: vec![4, 8, 12],
            forest_depths: vec![8, 12],
            forest_trees: vec![50, 100],
            min_leaf: 5,
            m_try: 5,
        }
    }
}

/// One evaluated candidate. `test_hamming` is filled only for the
/// candidate picked per family, keeping the test set out of selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub kind: ModelKind,
    pub params: String,
    pub val_hamming: f64,
    pub test_hamming: Option<f64>,
}

/// The winning candidate of one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedModel {
    pub model: PredictorModel,
    pub params: String,
    pub val_hamming: f64,
    pub test_hamming: f64,
}

/// Outcome of a hyperparameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    /// Every candidate, sorted by validation error.
    pub rows: Vec<LeaderboardRow>,
    /// Per-family winners in trivial, logistic, tree, forest order.
    pub selected: Vec<SelectedModel>,
    pub train_size: usize,
    pub val_size: usize,
    pub test_size: usize,
}

/// Trains every grid candidate on the 70 percent train cut, picks each
/// family's winner by validation Hamming error (first strict minimum),
/// and scores only winners on the held-out test cut.
///
/// All randomness keys off `seed`: the split, the two evaluation seeds,
/// and the forest training seed live in separate streams, so adding or
/// removing candidates never shifts another candidate's result.
pub fn select_hyperparams(
    ds: &LabeledDataset,
    grid: &HyperGrid,
    seed: u64,
) -> Result<SelectionReport> {
    let split = split_indices(ds.len(), seed)?;
    let val_seed = hash64(seed, 2);
    let test_seed = hash64(seed, 3);
    let forest_seed = hash64(seed, 4);

    let mut candidates: Vec<(PredictorModel, String)> = Vec::new();
    candidates.push((
        PredictorModel::Trivial(TrivialModel::train(ds, &split.train)),
        "hourly on-frequencies".to_string(),
    ));
    for &l2 in &grid.logistic_l2 {
        let hyper = LogisticHyper {
            l2,
            lr: grid.logistic_lr,
            epochs: grid.logistic_epochs,
        };
        candidates.push((
            PredictorModel::Logistic(LogisticModel::train(ds, &split.train, hyper)),
            format!("l2={l2},lr={},epochs={}", hyper.lr, hyper.epochs),
        ));
    }
    for &max_depth in &grid.tree_depths {
        let hyper = TreeHyper { max_depth, min_leaf: grid.min_leaf };
        candidates.push((
            PredictorModel::Tree(TreeModel::train(ds, &split.train, hyper)),
            format!("depth={max_depth},min_leaf={}", grid.min_leaf),
        ));
    }
    for &max_depth in &grid.forest_depths {
        for &num_trees in &grid.forest_trees {
            let hyper = ForestHyper {
                max_depth,
                min_leaf: grid.min_leaf,
                num_trees,
                m_try: grid.m_try,
                bootstrap: true,
            };
            candidates.push((
                PredictorModel::Forest(ForestModel::train(ds, &split.train, hyper, forest_seed)),
                format!(
                    "trees={num_trees},depth={max_depth},m_try={},min_leaf={}",
                    grid.m_try, grid.min_leaf
                ),
            ));
        }
    }

    let mut scored: Vec<(PredictorModel, String, f64)> = Vec::new();
    for (model, params) in candidates {
        let val = hamming_eval(&model, ds, &split.val, val_seed)?;
        scored.push((model, params, val));
    }

    let mut rows: Vec<LeaderboardRow> = Vec::new();
    let mut selected: Vec<SelectedModel> = Vec::new();
    for kind in [ModelKind::Trivial, ModelKind::Logistic, ModelKind::Tree, ModelKind::Forest] {
        // Ties keep the earliest candidate, so grid order is the tiebreak.
        let Some(best) = scored
            .iter()
            .filter(|(model, _, _)| model.kind() == kind)
            .fold(None::<&(PredictorModel, String, f64)>, |acc, cand| match acc {
                Some(held) if held.2 <= cand.2 => Some(held),
                _ => Some(cand),
            })
        else {
            continue;
        };
        let test = hamming_eval(&best.0, ds, &split.test, test_seed)?;
        selected.push(SelectedModel {
            model: best.0.clone(),
            params: best.1.clone(),
            val_hamming: best.2,
            test_hamming: test,
        });
    }
    for (model, params, val) in &scored {
        let winner = selected
            .iter()
            .find(|s| s.model.kind() == model.kind() && s.params == *params && s.val_hamming == *val);
        rows.push(LeaderboardRow {
            kind: model.kind(),
            params: params.clone(),
            val_hamming: *val,
            test_hamming: winner.map(|s| s.test_hamming),
        });
    }
    rows.sort_by(|a, b| a.val_hamming.total_cmp(&b.val_hamming));

    Ok(SelectionReport {
        rows,
        selected,
        train_size: split.train.len(),
        val_size: split.val.len(),
        test_size: split.test.len(),
    })
}
