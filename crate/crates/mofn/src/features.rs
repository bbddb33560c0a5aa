//! Standardization, logistic regression, and coefficient-based feature
//! ranking.
//!
//! The regression serves two roles: its coefficient magnitudes on
//! standardized inputs rank features for selection, and the fitted model is
//! itself one of the report baselines. Training is full-batch gradient
//! descent from a zero start, so results are bit-reproducible without any
//! random state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Labels;
use crate::FeatureMatrix;

/// Standardization output: the transformed matrix plus the constants and
/// the record of which columns survived.
#[derive(Debug, Clone)]
pub struct Standardized {
    pub z: FeatureMatrix,
    /// Per kept column, aligned with `z`.
    pub means: Vec<f64>,
    /// Per kept column, aligned with `z`; always positive.
    pub sds: Vec<f64>,
    /// Original indices of the kept columns.
    pub kept: Vec<usize>,
    /// Original indices of the dropped zero-variance columns.
    pub dropped: Vec<usize>,
}

/// Centers each column to mean zero and scales to unit population standard
/// deviation. Zero-variance columns carry no ranking information and are
/// dropped, with their indices reported.
pub fn standardize(x: &FeatureMatrix) -> Result<Standardized> {
    let n = x.n_rows();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let mut means = Vec::new();
    let mut sds = Vec::new();
    for j in 0..x.n_features() {
        let col = x.column(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        if sd > 0.0 {
            kept.push(j);
            means.push(mean);
            sds.push(sd);
        } else {
            dropped.push(j);
        }
    }
    if kept.is_empty() {
        return Err(Error::Degenerate(
            "every feature has zero variance; nothing to standardize".into(),
        ));
    }
    let names = kept.iter().map(|&j| x.feature_names()[j].clone()).collect();
    let mut values = Vec::with_capacity(n * kept.len());
    for i in 0..n {
        for (slot, &j) in kept.iter().enumerate() {
            values.push((x.value(i, j) - means[slot]) / sds[slot]);
        }
    }
    let z = FeatureMatrix::new(values, n, kept.len(), names)?;
    Ok(Standardized { z, means, sds, kept, dropped })
}

/// Linear scorer with built-in input normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LRModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Subtracted from inputs before applying `weights`.
    pub feature_means: Vec<f64>,
    /// Divides inputs before applying `weights`; all positive.
    pub feature_sds: Vec<f64>,
}

impl LRModel {
    /// The decision-function value (logit) for one row.
    pub fn score_row(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.weights.len() {
            return Err(Error::structural(format!(
                "row has {} values for {} weights",
                row.len(),
                self.weights.len()
            )));
        }
        let mut s = self.bias;
        for j in 0..row.len() {
            s += self.weights[j] * (row[j] - self.feature_means[j]) / self.feature_sds[j];
        }
        Ok(s)
    }

    /// Logits for every row of a matrix.
    pub fn score(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        (0..x.n_rows()).map(|i| self.score_row(x.row(i))).collect()
    }

    /// Probabilities for every row of a matrix.
    pub fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        Ok(self.score(x)?.into_iter().map(sigmoid).collect())
    }

    /// Hard 0/1 predictions at probability one half.
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<bool>> {
        Ok(self.score(x)?.into_iter().map(|s| s >= 0.0).collect())
    }
}

/// Gradient-descent settings shared by every iterative trainer in the
/// crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHyper {
    pub learning_rate: f64,
    pub l2_strength: f64,
    pub max_epochs: usize,
    /// Stop when the gradient norm falls to this level.
    pub tolerance: f64,
    /// Only consumed by trainers with random initialization or shuffling;
    /// logistic regression starts from zero and ignores it.
    pub seed: u64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        Self {
            learning_rate: 1.0,
            l2_strength: 1e-3,
            max_epochs: 2000,
            tolerance: 1e-6,
            seed: 0,
        }
    }
}

impl TrainHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::config("learning_rate must be positive and finite"));
        }
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return Err(Error::config("tolerance must be positive and finite"));
        }
        if self.l2_strength < 0.0 || !self.l2_strength.is_finite() {
            return Err(Error::config("l2_strength must be non-negative and finite"));
        }
        Ok(())
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean log loss of `weights`/`bias` on `(z, y)` plus an L2 penalty of
/// `0.5 * l2 * ||weights||^2` (the bias is unpenalized), together with its
/// exact gradient. Loss terms use the overflow-safe logit form.
pub fn logistic_loss_grad(
    z: &FeatureMatrix,
    y: &Labels,
    weights: &[f64],
    bias: f64,
    l2: f64,
) -> Result<(f64, Vec<f64>, f64)> {
    let n = z.n_rows();
    let d = z.n_features();
    if weights.len() != d {
        return Err(Error::structural(format!("{} weights for {d} features", weights.len())));
    }
    if y.len() != n {
        return Err(Error::structural(format!("{} labels for {n} rows", y.len())));
    }
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; d];
    let mut grad_b = 0.0;
    for i in 0..n {
        let row = z.row(i);
        let mut s = bias;
        for j in 0..d {
            s += weights[j] * row[j];
        }
        let t = if y.value(i) { 1.0 } else { 0.0 };
        // log(1 + e^s) - t*s, computed without overflow
        loss += s.max(0.0) - t * s + (-s.abs()).exp().ln_1p();
        let r = sigmoid(s) - t;
        for j in 0..d {
            grad_w[j] += r * row[j];
        }
        grad_b += r;
    }
    loss /= n as f64;
    grad_b /= n as f64;
    for j in 0..d {
        grad_w[j] /= n as f64;
        loss += 0.5 * l2 * weights[j] * weights[j];
        grad_w[j] += l2 * weights[j];
    }
    Ok((loss, grad_w, grad_b))
}

/// Fits a logistic regression on an already-standardized matrix by
/// full-batch gradient descent from zero parameters.
///
/// A step that raises the loss is retried at half the rate, so accepted
/// steps never increase the loss; descent stops at the gradient tolerance,
/// the epoch cap, or when the rate underflows.
pub fn train_logistic(z: &FeatureMatrix, y: &Labels, hyper: &TrainHyper) -> Result<LRModel> {
    hyper.validate()?;
    let d = z.n_features();
    let mut weights = vec![0.0; d];
    let mut bias = 0.0;
    let mut rate = hyper.learning_rate;
    let (mut loss, mut grad_w, mut grad_b) =
        logistic_loss_grad(z, y, &weights, bias, hyper.l2_strength)?;
    for _ in 0..hyper.max_epochs {
        if !loss.is_finite() {
            return Err(Error::training("logistic loss diverged to a non-finite value"));
        }
        let grad_norm = (grad_w.iter().map(|g| g * g).sum::<f64>() + grad_b * grad_b).sqrt();
        if grad_norm <= hyper.tolerance {
            break;
        }
        // backtracking: shrink the step until the loss stops increasing
        loop {
            let cand_w: Vec<f64> =
                weights.iter().zip(&grad_w).map(|(w, g)| w - rate * g).collect();
            let cand_b = bias - rate * grad_b;
            let (cand_loss, cand_gw, cand_gb) =
                logistic_loss_grad(z, y, &cand_w, cand_b, hyper.l2_strength)?;
            if cand_loss.is_nan() {
                return Err(Error::training("logistic loss diverged to NaN"));
            }
            if cand_loss <= loss {
                weights = cand_w;
                bias = cand_b;
                loss = cand_loss;
                grad_w = cand_gw;
                grad_b = cand_gb;
                break;
            }
            rate *= 0.5;
            if rate < 1e-300 {
                return Ok(LRModel {
                    weights,
                    bias,
                    feature_means: vec![0.0; d],
                    feature_sds: vec![1.0; d],
                });
            }
        }
    }
    if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
        return Err(Error::training("logistic parameters are not finite"));
    }
    Ok(LRModel { weights, bias, feature_means: vec![0.0; d], feature_sds: vec![1.0; d] })
}

/// Standardizes raw features, fits the regression, and re-expresses the
/// model against the raw kept columns so it can score unstandardized rows.
/// Returns the model together with the kept original column indices.
pub fn train_logistic_raw(
    x: &FeatureMatrix,
    y: &Labels,
    hyper: &TrainHyper,
) -> Result<(LRModel, Vec<usize>)> {
    let std = standardize(x)?;
    let fitted = train_logistic(&std.z, y, hyper)?;
    let model = LRModel {
        weights: fitted.weights,
        bias: fitted.bias,
        feature_means: std.means,
        feature_sds: std.sds,
    };
    Ok((model, std.kept))
}

/// Indices of the `k` largest-magnitude coefficients, ordered by descending
/// magnitude; equal magnitudes resolve to the lower index.
pub fn select_top_k(model: &LRModel, k: usize) -> Result<Vec<usize>> {
    let d = model.weights.len();
    if k > d {
        return Err(Error::config(format!("cannot select {k} of {d} features")));
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        model.weights[b]
            .abs()
            .partial_cmp(&model.weights[a].abs())
            .unwrap()
            .then(a.cmp(&b))
    });
    order.truncate(k);
    Ok(order)
}
