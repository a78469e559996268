//! Quantile regression forest.
//!
//! The forest answers distributional queries through observation weights: a
//! query vector routes to one leaf per tree, every training row sharing that
//! leaf receives weight `1 / (trees * leaf size)`, and the weighted empirical
//! distribution of the training targets is the estimated conditional
//! distribution. Quantiles, prediction intervals, the conditional CDF, and
//! the conditional mean all read off that one weight vector, so the point
//! prediction and the interval boundaries of an instance are always mutually
//! consistent.

mod grid;
mod tree;

pub use grid::{grid_search, GridSearchResult, GridSpec, LeaderboardEntry};
pub use tree::{RegressionTree, TreeNode, WeightBasis};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event_log::{Dataset, EncodingSchema};
use crate::rng::derive_seed;
use tree::FeatureMatrix;

#[derive(Debug, Error)]
pub enum QrfError {
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("bad hyperparameters: {0}")]
    BadHyperparameters(String),
    #[error("interval level must lie strictly between 0 and 1, got {0}")]
    InvalidLevel(f64),
    #[error("quantile order must lie strictly between 0 and 1, got {0}")]
    InvalidQuantile(f64),
    #[error("feature vector has {got} values, model expects {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u32),
    #[error("model was trained on a different feature schema (model {model}, requested {requested})")]
    SchemaMismatch { model: String, requested: String },
    #[error("model file has no trees")]
    NoTrees,
    #[error("leaf {leaf} of tree {tree} has no members")]
    EmptyLeaf { tree: usize, leaf: usize },
    #[error("hyperparameter grid has an empty dimension")]
    EmptyGrid,
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
    #[error(transparent)]
    Serde(#[from] serde_json::Error),
}

/// Forest hyperparameters. `seed` drives the bootstrap and feature sampling
/// of every tree, each tree deriving its own sub-seed from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub trees: usize,
    pub mtry: usize,
    pub min_n: usize,
    pub seed: u64,
    /// Rows the observation weights are computed over; defaults to the full
    /// training set.
    #[serde(default)]
    pub weight_basis: WeightBasis,
}

impl Hyperparameters {
    fn validate(&self) -> Result<(), QrfError> {
        if self.trees == 0 {
            return Err(QrfError::BadHyperparameters("trees must be >= 1".into()));
        }
        if self.mtry == 0 {
            return Err(QrfError::BadHyperparameters("mtry must be >= 1".into()));
        }
        if self.min_n == 0 {
            return Err(QrfError::BadHyperparameters("min_n must be >= 1".into()));
        }
        Ok(())
    }
}

/// A prediction interval with the point prediction of the same instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionInterval {
    pub lower: f64,
    pub upper: f64,
    pub point: f64,
    /// Nominal coverage level the boundaries were queried at.
    pub level: f64,
    /// Relative width `(upper - lower) / point`; absent when the point
    /// prediction is not positive.
    pub rwidth: Option<f64>,
}

impl PredictionInterval {
    pub fn new(lower: f64, upper: f64, point: f64, level: f64) -> Self {
        debug_assert!(lower <= upper);
        PredictionInterval {
            lower,
            upper,
            point,
            level,
            rwidth: (point > 0.0).then(|| (upper - lower) / point),
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

const MODEL_VERSION: u32 = 1;

#[derive(Serialize)]
struct ModelFileRef<'a> {
    version: u32,
    hyperparameters: &'a Hyperparameters,
    schema_hash: &'a str,
    trees: &'a [RegressionTree],
    train_targets: &'a [f64],
}

#[derive(Deserialize)]
struct ModelFileOwned {
    version: u32,
    hyperparameters: Hyperparameters,
    schema_hash: String,
    trees: Vec<RegressionTree>,
    train_targets: Vec<f64>,
}

/// A fitted quantile regression forest.
#[derive(Debug, Clone, PartialEq)]
pub struct QrfModel {
    pub trees: Vec<RegressionTree>,
    pub train_targets: Vec<f64>,
    pub hyperparameters: Hyperparameters,
    pub schema_hash: String,
    pub n_features: usize,
    /// Training row indices ordered by (target, index); the quantile scan
    /// walks targets in this order.
    sorted_order: Vec<u32>,
}

impl QrfModel {
    /// Fits a forest on an encoded dataset. `mtry` is clamped to the number
    /// of features when it exceeds it.
    pub fn fit(train: &Dataset, hp: Hyperparameters) -> Result<QrfModel, QrfError> {
        hp.validate()?;
        if train.is_empty() {
            return Err(QrfError::EmptyDataset);
        }
        let width = train.schema.width();
        let mut hp = hp;
        if hp.mtry > width {
            log::warn!("mtry {} exceeds feature count {width}, clamping", hp.mtry);
            hp.mtry = width;
        }
        let matrix = FeatureMatrix::from_rows(
            train.instances.iter().map(|i| i.features.as_slice()),
            width,
        );
        let targets = train.targets();
        let trees: Vec<RegressionTree> = (0..hp.trees)
            .into_par_iter()
            .map(|t| {
                tree::grow_tree(
                    &matrix,
                    &targets,
                    hp.mtry,
                    hp.min_n,
                    hp.weight_basis,
                    derive_seed(hp.seed, t as u64),
                )
            })
            .collect();
        Self::from_parts(trees, targets, hp, train.schema.hash_hex(), width)
    }

    /// Assembles a model from already-grown trees, validating that every
    /// leaf has members and every target is accounted for.
    pub fn from_parts(
        trees: Vec<RegressionTree>,
        train_targets: Vec<f64>,
        hyperparameters: Hyperparameters,
        schema_hash: String,
        n_features: usize,
    ) -> Result<QrfModel, QrfError> {
        if trees.is_empty() {
            return Err(QrfError::NoTrees);
        }
        if train_targets.is_empty() {
            return Err(QrfError::EmptyDataset);
        }
        for (t, tree) in trees.iter().enumerate() {
            for (l, members) in tree.leaf_members.iter().enumerate() {
                if members.is_empty() {
                    return Err(QrfError::EmptyLeaf { tree: t, leaf: l });
                }
            }
        }
        let mut sorted_order: Vec<u32> = (0..train_targets.len() as u32).collect();
        sorted_order.sort_by(|&a, &b| {
            train_targets[a as usize]
                .total_cmp(&train_targets[b as usize])
                .then(a.cmp(&b))
        });
        Ok(QrfModel {
            trees,
            train_targets,
            hyperparameters,
            schema_hash,
            n_features,
            sorted_order,
        })
    }

    pub fn n_train(&self) -> usize {
        self.train_targets.len()
    }

    fn check_width(&self, x: &[f64]) -> Result<(), QrfError> {
        if x.len() != self.n_features {
            return Err(QrfError::WidthMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn weights_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.train_targets.len()];
        let per_tree = 1.0 / self.trees.len() as f64;
        for tree in &self.trees {
            let members = &tree.leaf_members[tree.leaf_of(x)];
            let add = per_tree / members.len() as f64;
            for &i in members {
                w[i as usize] += add;
            }
        }
        w
    }

    /// Observation weights of `x` over the training rows: per tree, the rows
    /// sharing the query's leaf share `1 / trees` equally; summed over trees
    /// the weights are non-negative and sum to 1.
    pub fn forest_weights(&self, x: &[f64]) -> Result<Vec<f64>, QrfError> {
        self.check_width(x)?;
        Ok(self.weights_unchecked(x))
    }

    /// Walks targets in ascending order and returns, for each requested
    /// order, the smallest target whose cumulative weight reaches it. Weights
    /// of equal targets accumulate before any comparison, so tied targets act
    /// as one mass point.
    fn quantiles_from_weights(&self, w: &[f64], alphas: &[f64]) -> Vec<f64> {
        let mut positions: Vec<usize> = (0..alphas.len()).collect();
        positions.sort_by(|&a, &b| alphas[a].total_cmp(&alphas[b]));
        let mut out = vec![f64::NAN; alphas.len()];
        let ord = &self.sorted_order;
        let mut cum = 0.0;
        let mut next = 0;
        let mut i = 0;
        while i < ord.len() && next < positions.len() {
            let t = self.train_targets[ord[i] as usize];
            let mut j = i;
            while j < ord.len() && self.train_targets[ord[j] as usize] == t {
                cum += w[ord[j] as usize];
                j += 1;
            }
            while next < positions.len() && cum >= alphas[positions[next]] {
                out[positions[next]] = t;
                next += 1;
            }
            i = j;
        }
        // Cumulative weight can fall a rounding error short of 1; any
        // remaining order resolves to the largest target.
        let max_target = self.train_targets[*ord.last().expect("non-empty") as usize];
        for &pos in &positions[next..] {
            out[pos] = max_target;
        }
        out
    }

    fn mean_from_weights(&self, w: &[f64]) -> f64 {
        w.iter()
            .zip(&self.train_targets)
            .map(|(wi, yi)| wi * yi)
            .sum()
    }

    /// Estimated conditional CDF at `y`: total weight of training targets
    /// `<= y`.
    pub fn conditional_cdf(&self, x: &[f64], y: f64) -> Result<f64, QrfError> {
        self.check_width(x)?;
        let w = self.weights_unchecked(x);
        let mut cum = 0.0;
        for &i in &self.sorted_order {
            if self.train_targets[i as usize] > y {
                break;
            }
            cum += w[i as usize];
        }
        Ok(cum)
    }

    /// Conditional quantile of order `alpha`: the smallest training target
    /// whose cumulative weight reaches `alpha`.
    pub fn quantile_at(&self, x: &[f64], alpha: f64) -> Result<f64, QrfError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(QrfError::InvalidQuantile(alpha));
        }
        self.check_width(x)?;
        let w = self.weights_unchecked(x);
        Ok(self.quantiles_from_weights(&w, &[alpha])[0])
    }

    /// Conditional mean: the weight vector dotted with the training targets.
    pub fn predict_mean(&self, x: &[f64]) -> Result<f64, QrfError> {
        self.check_width(x)?;
        let w = self.weights_unchecked(x);
        Ok(self.mean_from_weights(&w))
    }

    /// Point prediction, lower and upper interval boundary, all read from a
    /// single weight computation.
    pub(crate) fn predict_parts(&self, x: &[f64], level: f64) -> Result<(f64, f64, f64), QrfError> {
        if !(level > 0.0 && level < 1.0) {
            return Err(QrfError::InvalidLevel(level));
        }
        self.check_width(x)?;
        let w = self.weights_unchecked(x);
        let alpha = (1.0 - level) / 2.0;
        let q = self.quantiles_from_weights(&w, &[alpha, 1.0 - alpha]);
        Ok((self.mean_from_weights(&w), q[0], q[1]))
    }

    /// Central prediction interval of the given coverage level, with the
    /// conditional mean as point prediction.
    pub fn predict_interval(&self, x: &[f64], level: f64) -> Result<PredictionInterval, QrfError> {
        let (point, lower, upper) = self.predict_parts(x, level)?;
        Ok(PredictionInterval::new(lower, upper, point, level))
    }

    /// Serializes the model to JSON.
    pub fn to_json(&self) -> Result<String, QrfError> {
        let file = ModelFileRef {
            version: MODEL_VERSION,
            hyperparameters: &self.hyperparameters,
            schema_hash: &self.schema_hash,
            trees: &self.trees,
            train_targets: &self.train_targets,
        };
        Ok(serde_json::to_string(&file)?)
    }

    /// Loads a model from JSON, refusing files of a different version or
    /// models trained on a different feature schema.
    pub fn from_json(json: &str, schema: &EncodingSchema) -> Result<QrfModel, QrfError> {
        let file: ModelFileOwned = serde_json::from_str(json)?;
        if file.version != MODEL_VERSION {
            return Err(QrfError::UnsupportedVersion(file.version));
        }
        let requested = schema.hash_hex();
        if file.schema_hash != requested {
            return Err(QrfError::SchemaMismatch {
                model: file.schema_hash,
                requested,
            });
        }
        Self::from_parts(
            file.trees,
            file.train_targets,
            file.hyperparameters,
            file.schema_hash,
            schema.width(),
        )
    }
}
