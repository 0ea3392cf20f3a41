//! Regularized least-squares classification with an RBF kernel.
//!
//! Training solves `(K + lambda I) alpha = y` on the Gram matrix
//! `K(u, w) = exp(-gamma ||u - w||^2)` of z-scored features, with labels
//! `y` in `{-1, +1}`. Prediction reads out the sign of the kernel expansion;
//! a decision value of exactly zero maps to `+1`. There is no bias term.

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Fixed seed for the pairwise-distance subsample of the bandwidth
/// heuristic, so training is deterministic for a given feature matrix.
const GAMMA_SAMPLE_SEED: u64 = 0x6d70_6465;
const MAX_GAMMA_PAIRS: usize = 1000;

/// RBF bandwidth choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    /// Median heuristic: `1 / (2 * median^2)` over pairwise distances of the
    /// standardized training features (at most [`MAX_GAMMA_PAIRS`] pairs).
    Auto,
    Value(f64),
}

/// Per-dimension z-scoring fitted on the training set. Dimensions with zero
/// variance keep scale 1.
#[derive(Debug, Clone)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(features: &[f64], dim: usize) -> Standardizer {
        let n = features.len() / dim;
        let mut mean = vec![0.0; dim];
        for row in features.chunks_exact(dim) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut scale = vec![0.0; dim];
        for row in features.chunks_exact(dim) {
            for ((s, v), m) in scale.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut scale {
            *s = (*s / n as f64).sqrt();
            if *s < 1e-12 {
                *s = 1.0;
            }
        }
        Standardizer { mean, scale }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_row(&self, row: &[f64], out: &mut [f64]) {
        for ((o, v), (m, s)) in out
            .iter_mut()
            .zip(row)
            .zip(self.mean.iter().zip(&self.scale))
        {
            *o = (v - m) / s;
        }
    }

    pub fn transform(&self, features: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        let mut out = vec![0.0; features.len()];
        for (orow, irow) in out.chunks_exact_mut(dim).zip(features.chunks_exact(dim)) {
            self.transform_row(irow, orow);
        }
        out
    }
}

/// A trained kernel least-squares model: the dual weights together with the
/// retained (standardized) training features they refer to.
#[derive(Debug, Clone)]
pub struct LseModel {
    dual_weights: Vec<f64>,
    training_features: Vec<f64>,
    dim: usize,
    gamma: f64,
    lambda: f64,
    standardizer: Standardizer,
}

impl LseModel {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn training_len(&self) -> usize {
        self.dual_weights.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dual_weights(&self) -> &[f64] {
        &self.dual_weights
    }
}

/// Predicted labels with their raw decision values.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub labels: Vec<i8>,
    pub decision_values: Vec<f64>,
}

#[inline]
fn squared_distance(u: &[f64], w: &[f64]) -> f64 {
    u.iter()
        .zip(w)
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

fn validate_features(features: &[f64], dim: usize, what: &str) -> Result<usize> {
    if dim == 0 {
        return Err(Error::Input("feature dimension must be at least 1".into()));
    }
    if features.len() % dim != 0 {
        return Err(Error::Input(format!(
            "{what}: feature buffer length {} is not a multiple of the dimension {dim}",
            features.len()
        )));
    }
    Ok(features.len() / dim)
}

fn median_heuristic_gamma(standardized: &[f64], n: usize, dim: usize) -> f64 {
    let total_pairs = n * (n - 1) / 2;
    let mut distances = Vec::with_capacity(total_pairs.min(MAX_GAMMA_PAIRS));
    let row = |i: usize| &standardized[i * dim..(i + 1) * dim];
    if total_pairs <= MAX_GAMMA_PAIRS {
        for i in 0..n {
            for j in i + 1..n {
                distances.push(squared_distance(row(i), row(j)).sqrt());
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(GAMMA_SAMPLE_SEED);
        while distances.len() < MAX_GAMMA_PAIRS {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i != j {
                distances.push(squared_distance(row(i), row(j)).sqrt());
            }
        }
    }
    distances.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if distances.len() % 2 == 1 {
        distances[distances.len() / 2]
    } else {
        0.5 * (distances[distances.len() / 2 - 1] + distances[distances.len() / 2])
    };
    if median > 1e-300 && median.is_finite() {
        1.0 / (2.0 * median * median)
    } else {
        // degenerate geometry (duplicate points); any positive width works
        1.0
    }
}

fn rbf_gram(standardized: &[f64], n: usize, dim: usize, gamma: f64) -> DMatrix<f64> {
    let row = |i: usize| &standardized[i * dim..(i + 1) * dim];
    DMatrix::from_fn(n, n, |i, j| (-gamma * squared_distance(row(i), row(j))).exp())
}

/// Trains the classifier. Labels must contain both classes; `lambda` must be
/// positive. With `Gamma::Auto` the bandwidth comes from the median
/// heuristic on the standardized features.
pub fn lse_train(
    features: &[f64],
    dim: usize,
    labels: &[i8],
    lambda: f64,
    gamma: Gamma,
) -> Result<LseModel> {
    let n = validate_features(features, dim, "lse_train")?;
    if n != labels.len() {
        return Err(Error::Input(format!(
            "lse_train: {n} feature rows but {} labels",
            labels.len()
        )));
    }
    if n < 2 {
        return Err(Error::Input("lse_train needs at least 2 samples".into()));
    }
    if labels.iter().any(|l| *l != 1 && *l != -1) {
        return Err(Error::Input("labels must be +1 or -1".into()));
    }
    if !labels.iter().any(|l| *l == 1) || !labels.iter().any(|l| *l == -1) {
        return Err(Error::Input(
            "training labels must contain both classes".into(),
        ));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Input(format!(
            "regularization lambda must be positive and finite, got {lambda}"
        )));
    }

    let standardizer = Standardizer::fit(features, dim);
    let standardized = standardizer.transform(features);

    let gamma = match gamma {
        Gamma::Value(g) => {
            if !(g > 0.0) || !g.is_finite() {
                return Err(Error::Input(format!(
                    "gamma must be positive and finite, got {g}"
                )));
            }
            g
        }
        Gamma::Auto => median_heuristic_gamma(&standardized, n, dim),
    };

    let mut system = rbf_gram(&standardized, n, dim, gamma);
    for i in 0..n {
        system[(i, i)] += lambda;
    }
    let y = DVector::from_iterator(n, labels.iter().map(|&l| l as f64));

    // lambda > 0 keeps the system positive definite; the LU fallback and the
    // error path guard against numerically degenerate inputs anyway
    let alpha = match system.clone().cholesky() {
        Some(chol) => chol.solve(&y),
        None => system
            .lu()
            .solve(&y)
            .ok_or_else(|| Error::Numeric("kernel system solve failed".into()))?,
    };

    Ok(LseModel {
        dual_weights: alpha.iter().copied().collect(),
        training_features: standardized,
        dim,
        gamma,
        lambda,
        standardizer,
    })
}

/// Evaluates the kernel expansion on each feature row. Empty input yields an
/// empty prediction.
pub fn lse_predict(model: &LseModel, features: &[f64]) -> Result<Prediction> {
    let n = validate_features(features, model.dim, "lse_predict")?;
    let mut labels = Vec::with_capacity(n);
    let mut decision_values = Vec::with_capacity(n);
    let mut buf = vec![0.0; model.dim];
    let train_row = |j: usize| &model.training_features[j * model.dim..(j + 1) * model.dim];
    for row in features.chunks_exact(model.dim) {
        model.standardizer.transform_row(row, &mut buf);
        let mut decision = 0.0;
        for (j, &alpha) in model.dual_weights.iter().enumerate() {
            decision += alpha * (-model.gamma * squared_distance(&buf, train_row(j))).exp();
        }
        labels.push(if decision >= 0.0 { 1 } else { -1 });
        decision_values.push(decision);
    }
    debug_assert_eq!(labels.len(), n);
    Ok(Prediction {
        labels,
        decision_values,
    })
}

/// Binary confusion counts with the positive class `+1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub true_pos: u64,
    pub true_neg: u64,
    pub false_pos: u64,
    pub false_neg: u64,
}

impl Confusion {
    pub fn record(&mut self, actual: i8, predicted: i8) {
        match (actual, predicted) {
            (1, 1) => self.true_pos += 1,
            (-1, -1) => self.true_neg += 1,
            (-1, 1) => self.false_pos += 1,
            _ => self.false_neg += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.true_neg + self.false_pos + self.false_neg
    }

    pub fn accuracy(&self) -> f64 {
        if self.total() == 0 {
            return 0.0;
        }
        (self.true_pos + self.true_neg) as f64 / self.total() as f64
    }

    pub fn merge(&mut self, other: &Confusion) {
        self.true_pos += other.true_pos;
        self.true_neg += other.true_neg;
        self.false_pos += other.false_pos;
        self.false_neg += other.false_neg;
    }
}

/// Assigns each sample a fold index in `0..folds`, stratified by class:
/// indices are shuffled per class with the seeded generator and dealt
/// round-robin.
pub fn stratified_folds(labels: &[i8], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Input(format!(
            "cross-validation needs at least 2 folds, got {folds}"
        )));
    }
    if folds > labels.len() {
        return Err(Error::Input(format!(
            "{folds} folds exceed the {} samples",
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; labels.len()];
    for class in [1i8, -1] {
        let mut indices: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == class)
            .map(|(i, _)| i)
            .collect();
        // Fisher-Yates with the shared generator
        for i in (1..indices.len()).rev() {
            let j = rng.random_range(0..=i);
            indices.swap(i, j);
        }
        for (pos, idx) in indices.into_iter().enumerate() {
            assignment[idx] = pos % folds;
        }
    }
    Ok(assignment)
}

/// Seeded stratified cross-validation outcome.
#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub fold_accuracies: Vec<f64>,
    pub confusion: Confusion,
    pub accuracy: f64,
    pub train_seconds: f64,
    pub predict_seconds: f64,
}

pub fn cross_validate(
    features: &[f64],
    dim: usize,
    labels: &[i8],
    folds: usize,
    lambda: f64,
    gamma: Gamma,
    seed: u64,
) -> Result<CvOutcome> {
    let n = validate_features(features, dim, "cross_validate")?;
    if n != labels.len() {
        return Err(Error::Input(format!(
            "cross_validate: {n} feature rows but {} labels",
            labels.len()
        )));
    }
    let assignment = stratified_folds(labels, folds, seed)?;
    let mut fold_accuracies = Vec::with_capacity(folds);
    let mut confusion = Confusion::default();
    let mut train_seconds = 0.0;
    let mut predict_seconds = 0.0;
    for fold in 0..folds {
        let mut train_x = Vec::new();
        let mut train_y = Vec::new();
        let mut test_x = Vec::new();
        let mut test_y = Vec::new();
        for (i, &f) in assignment.iter().enumerate() {
            let row = &features[i * dim..(i + 1) * dim];
            if f == fold {
                test_x.extend_from_slice(row);
                test_y.push(labels[i]);
            } else {
                train_x.extend_from_slice(row);
                train_y.push(labels[i]);
            }
        }
        if test_y.is_empty() {
            continue;
        }
        let t0 = std::time::Instant::now();
        let model = lse_train(&train_x, dim, &train_y, lambda, gamma)?;
        train_seconds += t0.elapsed().as_secs_f64();
        let t1 = std::time::Instant::now();
        let prediction = lse_predict(&model, &test_x)?;
        predict_seconds += t1.elapsed().as_secs_f64();
        let mut fold_conf = Confusion::default();
        for (&actual, &predicted) in test_y.iter().zip(&prediction.labels) {
            fold_conf.record(actual, predicted);
        }
        fold_accuracies.push(fold_conf.accuracy());
        confusion.merge(&fold_conf);
    }
    Ok(CvOutcome {
        fold_accuracies,
        accuracy: confusion.accuracy(),
        confusion,
        train_seconds,
        predict_seconds,
    })
}
