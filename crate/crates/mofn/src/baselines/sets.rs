//! Soft-threshold training: per-feature cut points and a downstream linear
//! layer learned jointly by gradient descent on the log loss of
//! `sigma(b + sum_j w_j * sigma((x_ij - phi_j) / tau))`.
//!
//! The cut points live in raw feature units so they can be read directly
//! as clinical thresholds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{sigmoid, TrainHyper};
use crate::model::{FeatureMatrix, Labels};

/// Learned soft-threshold model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetsModel {
    /// Per-feature cut points, in raw feature units.
    pub phi: Vec<f64>,
    /// Sigmoid temperature; smaller values sharpen the soft step.
    pub tau: f64,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl SetsModel {
    pub fn score_row(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.phi.len() {
            return Err(Error::structural(format!(
                "row of width {} for a model over {} features",
                row.len(),
                self.phi.len()
            )));
        }
        let mut s = self.bias;
        for j in 0..row.len() {
            s += self.weights[j] * sigmoid((row[j] - self.phi[j]) / self.tau);
        }
        Ok(s)
    }

    /// Positive-class probabilities.
    pub fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        (0..x.n_rows()).map(|i| self.score_row(x.row(i)).map(sigmoid)).collect()
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<bool>> {
        (0..x.n_rows()).map(|i| self.score_row(x.row(i)).map(|s| s >= 0.0)).collect()
    }
}

/// Mean log loss plus `0.5 * l2 * ||weights||^2` (cut points and bias are
/// unpenalized), with exact gradients for every parameter block.
pub fn sets_loss_grad(
    x: &FeatureMatrix,
    y: &Labels,
    phi: &[f64],
    tau: f64,
    weights: &[f64],
    bias: f64,
    l2: f64,
) -> Result<(f64, Vec<f64>, Vec<f64>, f64)> {
    let n = x.n_rows();
    let d = x.n_features();
    if phi.len() != d || weights.len() != d {
        return Err(Error::structural(format!(
            "{} cut points and {} weights for {d} features",
            phi.len(),
            weights.len()
        )));
    }
    if y.len() != n {
        return Err(Error::structural(format!("{} labels for {n} rows", y.len())));
    }
    let mut loss = 0.0;
    let mut grad_phi = vec![0.0; d];
    let mut grad_w = vec![0.0; d];
    let mut grad_b = 0.0;
    let mut g_row = vec![0.0; d];
    for i in 0..n {
        let row = x.row(i);
        let mut s = bias;
        for j in 0..d {
            let g = sigmoid((row[j] - phi[j]) / tau);
            g_row[j] = g;
            s += weights[j] * g;
        }
        let t = if y.value(i) { 1.0 } else { 0.0 };
        loss += s.max(0.0) - t * s + (-s.abs()).exp().ln_1p();
        let r = sigmoid(s) - t;
        grad_b += r;
        for j in 0..d {
            let g = g_row[j];
            grad_w[j] += r * g;
            // d g / d phi = -g (1 - g) / tau
            grad_phi[j] -= r * weights[j] * g * (1.0 - g) / tau;
        }
    }
    let inv_n = 1.0 / n as f64;
    loss *= inv_n;
    grad_b *= inv_n;
    for j in 0..d {
        grad_w[j] = grad_w[j] * inv_n + l2 * weights[j];
        grad_phi[j] *= inv_n;
        loss += 0.5 * l2 * weights[j] * weights[j];
    }
    Ok((loss, grad_phi, grad_w, grad_b))
}

/// Joint training of cut points, weights, and bias from column-mean cut
/// points and zero weights.
pub fn sets_train(
    x: &FeatureMatrix,
    y: &Labels,
    tau: f64,
    hyper: &TrainHyper,
) -> Result<SetsModel> {
    sets_train_configured(x, y, tau, hyper, None, false)
}

/// Training with an explicit starting point and an optional cut-point
/// freeze. Freezing turns this into plain logistic regression on the fixed
/// soft features, which pins down the reduction behavior in tests.
pub fn sets_train_configured(
    x: &FeatureMatrix,
    y: &Labels,
    tau: f64,
    hyper: &TrainHyper,
    init_phi: Option<&[f64]>,
    freeze_phi: bool,
) -> Result<SetsModel> {
    hyper.validate()?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::config(format!("temperature must be finite and > 0, got {tau}")));
    }
    let d = x.n_features();
    let mut phi = match init_phi {
        Some(p) => {
            if p.len() != d {
                return Err(Error::structural(format!(
                    "{} starting cut points for {d} features",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::structural("starting cut points must be finite"));
            }
            p.to_vec()
        }
        None => crate::baselines::column_means(x),
    };
    let mut weights = vec![0.0; d];
    let mut bias = 0.0;
    let mut rate = hyper.learning_rate;
    let (mut loss, mut grad_phi, mut grad_w, mut grad_b) =
        sets_loss_grad(x, y, &phi, tau, &weights, bias, hyper.l2_strength)?;
    for _ in 0..hyper.max_epochs {
        if !loss.is_finite() {
            return Err(Error::training("soft-threshold loss diverged to a non-finite value"));
        }
        let phi_norm2: f64 = if freeze_phi { 0.0 } else { grad_phi.iter().map(|g| g * g).sum() };
        let grad_norm = (phi_norm2
            + grad_w.iter().map(|g| g * g).sum::<f64>()
            + grad_b * grad_b)
            .sqrt();
        if grad_norm <= hyper.tolerance {
            break;
        }
        // backtracking with recovery: the accepted rate grows a little each
        // epoch so flat regions (large tau) are still crossed in reasonable
        // time, and any overshoot is halved away again
        loop {
            let cand_phi: Vec<f64> = if freeze_phi {
                phi.clone()
            } else {
                phi.iter().zip(&grad_phi).map(|(p, g)| p - rate * g).collect()
            };
            let cand_w: Vec<f64> =
                weights.iter().zip(&grad_w).map(|(w, g)| w - rate * g).collect();
            let cand_b = bias - rate * grad_b;
            let (cand_loss, cand_gp, cand_gw, cand_gb) =
                sets_loss_grad(x, y, &cand_phi, tau, &cand_w, cand_b, hyper.l2_strength)?;
            if cand_loss.is_nan() {
                return Err(Error::training("soft-threshold loss diverged to NaN"));
            }
            if cand_loss <= loss {
                phi = cand_phi;
                weights = cand_w;
                bias = cand_b;
                loss = cand_loss;
                grad_phi = cand_gp;
                grad_w = cand_gw;
                grad_b = cand_gb;
                rate = (rate * 1.25).min(1e9);
                break;
            }
            rate *= 0.5;
            if rate < 1e-300 {
                return Ok(SetsModel { phi, tau, weights, bias });
            }
        }
    }
    if phi.iter().chain(weights.iter()).any(|v| !v.is_finite()) || !bias.is_finite() {
        return Err(Error::training("soft-threshold parameters are not finite"));
    }
    Ok(SetsModel { phi, tau, weights, bias })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{logistic_loss_grad, train_logistic};
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn labels(bits: &[u8]) -> Labels {
        Labels::new(bits.iter().map(|&b| b == 1).collect()).unwrap()
    }

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("f{j}")).collect()
    }

    fn random_instance(seed: u64, n: usize, d: usize) -> (FeatureMatrix, Labels) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
        let mut bits: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
        bits[0] = 1;
        bits[1] = 0;
        (FeatureMatrix::from_rows(&rows, names(d)).unwrap(), labels(&bits))
    }

    fn finite_diff_check(seed: u64) -> f64 {
        let (x, y) = random_instance(seed, 12, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
        let phi: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let b: f64 = rng.gen_range(-1.0..1.0);
        let tau = 0.4;
        let l2 = 1e-3;
        let (_, gp, gw, gb) = sets_loss_grad(&x, &y, &phi, tau, &w, b, l2).unwrap();
        let loss_at = |phi: &[f64], w: &[f64], b: f64| {
            sets_loss_grad(&x, &y, phi, tau, w, b, l2).unwrap().0
        };
        let h = 1e-6;
        let mut analytic = Vec::new();
        let mut numeric = Vec::new();
        for j in 0..3 {
            let mut hi = phi.clone();
            let mut lo = phi.clone();
            hi[j] += h;
            lo[j] -= h;
            numeric.push((loss_at(&hi, &w, b) - loss_at(&lo, &w, b)) / (2.0 * h));
            analytic.push(gp[j]);
        }
        for j in 0..3 {
            let mut hi = w.clone();
            let mut lo = w.clone();
            hi[j] += h;
            lo[j] -= h;
            numeric.push((loss_at(&phi, &hi, b) - loss_at(&phi, &lo, b)) / (2.0 * h));
            analytic.push(gw[j]);
        }
        numeric.push((loss_at(&phi, &w, b + h) - loss_at(&phi, &w, b - h)) / (2.0 * h));
        analytic.push(gb);
        let diff: f64 = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, n)| (a - n) * (a - n))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt()
            + numeric.iter().map(|n| n * n).sum::<f64>().sqrt();
        diff / scale.max(1e-12)
    }

    #[test]
    fn gradients_match_central_differences() {
        for seed in 0..5 {
            let rel = finite_diff_check(seed);
            assert!(rel < 1e-4, "seed {seed}: relative gradient error {rel}");
        }
    }

    #[test]
    fn one_feature_basin_lands_between_the_classes() {
        let x = FeatureMatrix::from_rows(
            &[vec![0.0], vec![1.0], vec![2.0], vec![3.0], vec![4.0], vec![5.0]],
            names(1),
        )
        .unwrap();
        let y = labels(&[0, 0, 0, 1, 1, 1]);
        let hyper = TrainHyper { max_epochs: 5000, ..TrainHyper::default() };
        let model = sets_train(&x, &y, 0.1, &hyper).unwrap();
        assert!(
            (2.0..=3.0).contains(&model.phi[0]),
            "cut point {} outside the class gap",
            model.phi[0]
        );
        assert!(model.weights[0] > 0.0);

        // grid oracle: refitting with the cut point frozen on a coarse grid,
        // the gap cell must win
        let mut grid_losses = Vec::new();
        for phi0 in [0.5, 1.5, 2.5, 3.5, 4.5] {
            let frozen =
                sets_train_configured(&x, &y, 0.1, &hyper, Some(&[phi0]), true).unwrap();
            let (loss, _, _, _) = sets_loss_grad(
                &x,
                &y,
                &frozen.phi,
                0.1,
                &frozen.weights,
                frozen.bias,
                hyper.l2_strength,
            )
            .unwrap();
            grid_losses.push((phi0, loss));
        }
        let best = grid_losses
            .iter()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(best, 2.5);
    }

    #[test]
    fn frozen_cut_points_reduce_to_logistic_regression() {
        let (x, y) = random_instance(3, 24, 2);
        let hyper = TrainHyper {
            l2_strength: 0.0,
            max_epochs: 20000,
            tolerance: 1e-9,
            ..TrainHyper::default()
        };
        let frozen =
            sets_train_configured(&x, &y, 1.0, &hyper, Some(&[0.0, 0.0]), true).unwrap();
        assert_eq!(frozen.phi, vec![0.0, 0.0]);

        // the same convex problem, fit by the plain regression trainer on a
        // matrix of the soft features
        let mut soft = Vec::new();
        for i in 0..x.n_rows() {
            soft.push(vec![sigmoid(x.value(i, 0)), sigmoid(x.value(i, 1))]);
        }
        let soft = FeatureMatrix::from_rows(&soft, names(2)).unwrap();
        let lr = train_logistic(&soft, &y, &hyper).unwrap();
        let (lr_loss, _, _) =
            logistic_loss_grad(&soft, &y, &lr.weights, lr.bias, 0.0).unwrap();
        let (sets_loss, _, _, _) =
            sets_loss_grad(&x, &y, &frozen.phi, 1.0, &frozen.weights, frozen.bias, 0.0)
                .unwrap();
        assert_abs_diff_eq!(sets_loss, lr_loss, epsilon = 1e-5);
    }

    #[test]
    fn large_temperature_approaches_the_linear_model() {
        let (x, y) = random_instance(11, 40, 2);
        let hyper = TrainHyper {
            l2_strength: 0.0,
            max_epochs: 30000,
            tolerance: 1e-10,
            ..TrainHyper::default()
        };
        // freeze the cut points so only the (convex) linear part trains
        let means = crate::baselines::column_means(&x);
        let soft = sets_train_configured(&x, &y, 50.0, &hyper, Some(&means), true).unwrap();
        let (soft_loss, _, _, _) =
            sets_loss_grad(&x, &y, &soft.phi, 50.0, &soft.weights, soft.bias, 0.0).unwrap();

        let lr = train_logistic(&x, &y, &hyper).unwrap();
        let (lr_loss, _, _) = logistic_loss_grad(&x, &y, &lr.weights, lr.bias, 0.0).unwrap();
        let rel = (soft_loss - lr_loss).abs() / lr_loss;
        assert!(rel < 0.05, "soft {soft_loss} vs linear {lr_loss}: rel {rel}");
    }

    #[test]
    fn rejects_bad_temperature() {
        let (x, y) = random_instance(1, 8, 2);
        for tau in [0.0, -1.0, f64::NAN] {
            assert!(sets_train(&x, &y, tau, &TrainHyper::default()).is_err());
        }
    }

    #[test]
    fn training_is_deterministic() {
        let (x, y) = random_instance(9, 30, 3);
        let hyper = TrainHyper { max_epochs: 500, ..TrainHyper::default() };
        let a = sets_train(&x, &y, 0.2, &hyper).unwrap();
        let b = sets_train(&x, &y, 0.2, &hyper).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scores_are_probabilities() {
        let (x, y) = random_instance(13, 20, 2);
        let model =
            sets_train(&x, &y, 0.5, &TrainHyper { max_epochs: 200, ..TrainHyper::default() })
                .unwrap();
        for p in model.predict_proba(&x).unwrap() {
            assert!((0.0..=1.0).contains(&p));
        }
    }
}
