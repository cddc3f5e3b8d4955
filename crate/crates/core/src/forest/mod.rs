//! Multi-output random-forest regression from circuit features to budget
//! distributions.
//!
//! Each tree is a CART regressor over the 12 features of [`featurize`] that
//! predicts the full `(logical, t_states, rotations)` label at once. Splits
//! minimize the summed per-output squared error of the two children. Trees
//! are bagged and their leaf vectors averaged; the average is normalized onto
//! the model's total budget.

mod io;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::LogicalCounts;
use crate::dataset::{CostMetric, DatasetRecord};
use crate::sampler::{normalize, task_rng, BudgetDistribution};

pub use io::{load_model, read_model, save_model, write_model, FORMAT_VERSION, MAGIC};

pub const N_FEATURES: usize = 12;

/// Six raw logical counts followed by `log2(1 + x)` of each.
pub type FeatureVector = [f64; N_FEATURES];

pub fn featurize(c: &LogicalCounts) -> FeatureVector {
    let raw = c.as_array();
    let mut f = [0.0; N_FEATURES];
    for (i, x) in raw.into_iter().enumerate() {
        f[i] = x as f64;
        f[i + 6] = (x as f64).ln_1p() / std::f64::consts::LN_2;
    }
    f
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub n_trees: u32,
    /// Maximum tree depth; `u32::MAX` leaves depth unbounded.
    pub max_depth: u32,
    pub min_leaf: u32,
    pub bootstrap: bool,
    pub features_per_split: u32,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 12,
            min_leaf: 2,
            bootstrap: true,
            features_per_split: 4,
        }
    }
}

impl Hyperparams {
    fn validate(&self) -> Result<(), ForestError> {
        if self.n_trees == 0 || self.min_leaf == 0 {
            return Err(ForestError::InvalidHyperparams(
                "n_trees and min_leaf must be at least 1".into(),
            ));
        }
        if !(1..=N_FEATURES as u32).contains(&self.features_per_split) {
            return Err(ForestError::InvalidHyperparams(format!(
                "features_per_split must be in 1..={N_FEATURES}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub total_budget: f64,
    pub metric: CostMetric,
    pub seed: u64,
    pub n_train: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Rows with `feature <= threshold` go left.
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        value: [f64; 3],
        n_samples: u32,
    },
}

/// Nodes in pre-order; the root is node 0 and children always follow their parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &FeatureVector) -> [f64; 3] {
        let mut idx = 0;
        loop {
            match self.nodes[idx] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if x[feature as usize] <= threshold { left } else { right } as usize;
                }
                Node::Leaf { value, .. } => return value,
            }
        }
    }

    pub fn depth(&self) -> u32 {
        fn walk(nodes: &[Node], idx: usize) -> u32 {
            match nodes[idx] {
                Node::Split { left, right, .. } => 1 + walk(nodes, left as usize).max(walk(nodes, right as usize)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = (&[f64; 3], u32)> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { value, n_samples } => Some((value, *n_samples)),
            Node::Split { .. } => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub hyperparams: Hyperparams,
    pub metadata: TrainingMetadata,
    pub trees: Vec<Tree>,
}

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("dataset too small: {n} records, need at least {required}")]
    DatasetTooSmall { n: usize, required: usize },
    #[error("dataset mixes total budgets or metrics: {0}")]
    MixedBudgets(String),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("model format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u8, expected: u8 },
    #[error("corrupt model: {0}")]
    CorruptModel(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Prediction with the spread of the individual trees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionDetail {
    pub distribution: BudgetDistribution,
    /// Arithmetic mean of the tree outputs before normalization.
    pub raw_mean: [f64; 3],
    /// Population variance of the tree outputs, per component.
    pub tree_variance: [f64; 3],
}

impl ForestModel {
    /// Mean of the tree outputs, before normalization.
    pub fn predict_raw(&self, c: &LogicalCounts) -> [f64; 3] {
        self.predict_detailed(c).raw_mean
    }

    pub fn predict_detailed(&self, c: &LogicalCounts) -> PredictionDetail {
        let x = featurize(c);
        let outputs: Vec<[f64; 3]> = self.trees.iter().map(|t| t.predict(&x)).collect();
        let n = outputs.len() as f64;
        let mut mean = [0.0; 3];
        for o in &outputs {
            for k in 0..3 {
                mean[k] += o[k];
            }
        }
        mean = mean.map(|s| s / n);
        let mut var = [0.0; 3];
        for o in &outputs {
            for k in 0..3 {
                var[k] += (o[k] - mean[k]).powi(2);
            }
        }
        var = var.map(|s| s / n);
        let distribution =
            normalize(mean, self.metadata.total_budget).expect("leaf vectors are non-negative and not all zero");
        PredictionDetail {
            distribution,
            raw_mean: mean,
            tree_variance: var,
        }
    }

    /// Averaged tree prediction normalized onto the model's total budget.
    pub fn predict(&self, c: &LogicalCounts) -> BudgetDistribution {
        self.predict_detailed(c).distribution
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        let hp = &self.hyperparams;
        hp.validate().map_err(|e| e.to_string())?;
        let total = self.metadata.total_budget;
        if !(total > 0.0 && total < 1.0) {
            return Err(format!("total_budget {total} outside (0, 1)"));
        }
        if self.trees.len() != hp.n_trees as usize {
            return Err(format!("expected {} trees, found {}", hp.n_trees, self.trees.len()));
        }
        for (t, tree) in self.trees.iter().enumerate() {
            let n = tree.nodes.len();
            if n == 0 {
                return Err(format!("tree {t} is empty"));
            }
            let mut referenced = vec![false; n];
            for (i, node) in tree.nodes.iter().enumerate() {
                match *node {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        if feature as usize >= N_FEATURES || !threshold.is_finite() {
                            return Err(format!("tree {t} node {i}: bad split"));
                        }
                        for child in [left as usize, right as usize] {
                            if child <= i || child >= n || referenced[child] {
                                return Err(format!("tree {t} node {i}: bad child index {child}"));
                            }
                            referenced[child] = true;
                        }
                    }
                    Node::Leaf { value, n_samples } => {
                        if value.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                            return Err(format!("tree {t} node {i}: leaf value {value:?}"));
                        }
                        if n_samples < hp.min_leaf {
                            return Err(format!("tree {t} node {i}: leaf holds {n_samples} rows"));
                        }
                    }
                }
            }
            if referenced.iter().skip(1).any(|r| !r) {
                return Err(format!("tree {t} has unreachable nodes"));
            }
            if tree.depth() > hp.max_depth {
                return Err(format!("tree {t} exceeds max_depth"));
            }
        }
        Ok(())
    }
}

struct TrainingSet {
    x: Vec<FeatureVector>,
    y: Vec<[f64; 3]>,
}

fn sse(y: &[[f64; 3]], rows: &[usize]) -> f64 {
    let n = rows.len() as f64;
    let mut mean = [0.0; 3];
    for &r in rows {
        for k in 0..3 {
            mean[k] += y[r][k];
        }
    }
    mean = mean.map(|s| s / n);
    rows.iter()
        .map(|&r| (0..3).map(|k| (y[r][k] - mean[k]).powi(2)).sum::<f64>())
        .sum()
}

fn leaf(y: &[[f64; 3]], rows: &[usize]) -> Node {
    let n = rows.len() as f64;
    let mut value = [0.0; 3];
    for &r in rows {
        for k in 0..3 {
            value[k] += y[r][k];
        }
    }
    Node::Leaf {
        value: value.map(|s| s / n),
        n_samples: rows.len() as u32,
    }
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    child_sse: f64,
}

/// Best split of `rows` on one feature, or `None` if no threshold leaves
/// `min_leaf` rows on both sides.
fn best_split_on(data: &TrainingSet, rows: &mut [usize], feature: usize, min_leaf: usize) -> Option<SplitChoice> {
    let x = &data.x;
    rows.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]).then(a.cmp(&b)));
    let n = rows.len();
    let mut total = [0.0; 3];
    let mut total_sq = [0.0; 3];
    for &r in rows.iter() {
        for k in 0..3 {
            total[k] += data.y[r][k];
            total_sq[k] += data.y[r][k] * data.y[r][k];
        }
    }
    let mut left = [0.0; 3];
    let mut left_sq = [0.0; 3];
    let mut best: Option<SplitChoice> = None;
    for i in 0..n - 1 {
        let r = rows[i];
        for k in 0..3 {
            left[k] += data.y[r][k];
            left_sq[k] += data.y[r][k] * data.y[r][k];
        }
        let n_left = i + 1;
        let n_right = n - n_left;
        if n_left < min_leaf || n_right < min_leaf {
            continue;
        }
        let (lo, hi) = (x[r][feature], x[rows[i + 1]][feature]);
        if lo >= hi {
            continue;
        }
        let mut child = 0.0;
        for k in 0..3 {
            let right = total[k] - left[k];
            let right_sq = total_sq[k] - left_sq[k];
            child += (left_sq[k] - left[k] * left[k] / n_left as f64).max(0.0);
            child += (right_sq - right * right / n_right as f64).max(0.0);
        }
        if best.as_ref().is_none_or(|b| child < b.child_sse) {
            let mid = lo + (hi - lo) / 2.0;
            best = Some(SplitChoice {
                feature,
                threshold: if mid < hi { mid } else { lo },
                child_sse: child,
            });
        }
    }
    best
}

struct Builder<'a, R> {
    data: &'a TrainingSet,
    hp: &'a Hyperparams,
    rng: R,
    nodes: Vec<Node>,
}

impl<R: Rng> Builder<'_, R> {
    fn build(&mut self, rows: &mut [usize], depth: u32) -> u32 {
        let id = self.nodes.len() as u32;
        let min_leaf = self.hp.min_leaf as usize;
        if depth >= self.hp.max_depth || rows.len() < 2 * min_leaf || sse(&self.data.y, rows) <= 0.0 {
            self.nodes.push(leaf(&self.data.y, rows));
            return id;
        }

        // visit features in random order until `features_per_split` of them
        // offered a valid threshold
        let mut features: Vec<usize> = (0..N_FEATURES).collect();
        features.shuffle(&mut self.rng);
        let mut best: Option<SplitChoice> = None;
        let mut informative = 0;
        for f in features {
            if let Some(choice) = best_split_on(self.data, rows, f, min_leaf) {
                informative += 1;
                if best.as_ref().is_none_or(|b| choice.child_sse < b.child_sse) {
                    best = Some(choice);
                }
                if informative == self.hp.features_per_split {
                    break;
                }
            }
        }
        let Some(split) = best else {
            self.nodes.push(leaf(&self.data.y, rows));
            return id;
        };

        let x = &self.data.x;
        rows.sort_by(|&a, &b| x[a][split.feature].total_cmp(&x[b][split.feature]).then(a.cmp(&b)));
        let n_left = rows.partition_point(|&r| x[r][split.feature] <= split.threshold);
        self.nodes.push(Node::Leaf {
            value: [0.0; 3],
            n_samples: 0,
        });
        let (left_rows, right_rows) = rows.split_at_mut(n_left);
        let left = self.build(left_rows, depth + 1);
        let right = self.build(right_rows, depth + 1);
        self.nodes[id as usize] = Node::Split {
            feature: split.feature as u32,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

/// Trains a forest on `dataset`. Tree `i` draws from stream `i` of `seed`,
/// so the model is identical regardless of thread scheduling.
pub fn train(dataset: &[DatasetRecord], hyperparams: &Hyperparams, seed: u64) -> Result<ForestModel, ForestError> {
    hyperparams.validate()?;
    let required = (2 * hyperparams.min_leaf as usize).max(1);
    if dataset.len() < required {
        return Err(ForestError::DatasetTooSmall {
            n: dataset.len(),
            required,
        });
    }
    let first = &dataset[0];
    if let Some(r) = dataset
        .iter()
        .find(|r| r.total_budget != first.total_budget || r.metric != first.metric)
    {
        return Err(ForestError::MixedBudgets(format!(
            "`{}` has ({}, {}) but `{}` has ({}, {})",
            first.circuit_id, first.total_budget, first.metric, r.circuit_id, r.total_budget, r.metric
        )));
    }

    let data = TrainingSet {
        x: dataset.iter().map(|r| featurize(&r.counts)).collect(),
        y: dataset.iter().map(|r| r.best_distribution.components()).collect(),
    };
    let n = dataset.len();
    let trees = (0..u64::from(hyperparams.n_trees))
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, i);
            let mut rows: Vec<usize> = if hyperparams.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut builder = Builder {
                data: &data,
                hp: hyperparams,
                rng,
                nodes: Vec::new(),
            };
            builder.build(&mut rows, 0);
            Tree { nodes: builder.nodes }
        })
        .collect();

    Ok(ForestModel {
        hyperparams: *hyperparams,
        metadata: TrainingMetadata {
            total_budget: first.total_budget,
            metric: first.metric,
            seed,
            n_train: n as u64,
        },
        trees,
    })
}

/// Free-function form of [`ForestModel::predict`].
pub fn predict(model: &ForestModel, c: &LogicalCounts) -> BudgetDistribution {
    model.predict(c)
}
