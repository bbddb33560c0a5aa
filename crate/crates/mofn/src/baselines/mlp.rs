//! Small feedforward network: one rectified hidden layer and a logistic
//! output, trained by seeded mini-batch gradient descent. The
//! non-interpretable reference point for the comparison tables.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{sigmoid, TrainHyper};
use crate::model::{FeatureMatrix, Labels};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub n_inputs: usize,
    pub hidden: usize,
    /// Hidden weights, one row of `n_inputs` values per hidden unit.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl MlpModel {
    /// Random uniform init in `±1/sqrt(fan_in)` per layer, zero biases.
    /// Hidden units must start distinct: equal rows receive equal gradients
    /// forever, so a symmetric start can never use more than one unit.
    pub fn init_seeded(n_inputs: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        if n_inputs == 0 || hidden == 0 {
            return Err(Error::config("network needs at least one input and one hidden unit"));
        }
        let r1 = 1.0 / (n_inputs as f64).sqrt();
        let r2 = 1.0 / (hidden as f64).sqrt();
        Ok(Self {
            n_inputs,
            hidden,
            w1: (0..hidden * n_inputs).map(|_| rng.gen_range(-r1..r1)).collect(),
            b1: vec![0.0; hidden],
            w2: (0..hidden).map(|_| rng.gen_range(-r2..r2)).collect(),
            b2: 0.0,
        })
    }

    /// Pre-sigmoid output for one input row.
    pub fn logit_row(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.n_inputs {
            return Err(Error::structural(format!(
                "row of width {} for a network over {} inputs",
                row.len(),
                self.n_inputs
            )));
        }
        let mut s = self.b2;
        for k in 0..self.hidden {
            let mut a = self.b1[k];
            let w_row = &self.w1[k * self.n_inputs..(k + 1) * self.n_inputs];
            for j in 0..self.n_inputs {
                a += w_row[j] * row[j];
            }
            if a > 0.0 {
                s += self.w2[k] * a;
            }
        }
        Ok(s)
    }

    pub fn score_row(&self, row: &[f64]) -> Result<f64> {
        self.logit_row(row).map(sigmoid)
    }

    pub fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        (0..x.n_rows()).map(|i| self.score_row(x.row(i))).collect()
    }

    /// Hard labels at the 0.5 probability threshold.
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<bool>> {
        (0..x.n_rows()).map(|i| self.logit_row(x.row(i)).map(|s| s >= 0.0)).collect()
    }

    /// All parameters as one vector: hidden weights, hidden biases, output
    /// weights, output bias. The layout contract for gradient checking.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut p = self.w1.clone();
        p.extend_from_slice(&self.b1);
        p.extend_from_slice(&self.w2);
        p.push(self.b2);
        p
    }

    pub fn set_flat_params(&mut self, p: &[f64]) -> Result<()> {
        let expect = self.hidden * self.n_inputs + 2 * self.hidden + 1;
        if p.len() != expect {
            return Err(Error::structural(format!(
                "{} parameters for a network expecting {expect}",
                p.len()
            )));
        }
        let hw = self.hidden * self.n_inputs;
        self.w1.copy_from_slice(&p[..hw]);
        self.b1.copy_from_slice(&p[hw..hw + self.hidden]);
        self.w2.copy_from_slice(&p[hw + self.hidden..hw + 2 * self.hidden]);
        self.b2 = p[hw + 2 * self.hidden];
        Ok(())
    }
}

/// Mean log loss over `rows` (all rows when `None`) plus
/// `0.5 * l2 * (||w1||^2 + ||w2||^2)`, with the exact gradient in
/// [`MlpModel::flat_params`] order.
pub fn mlp_loss_grad(
    model: &MlpModel,
    x: &FeatureMatrix,
    y: &Labels,
    l2: f64,
    rows: Option<&[usize]>,
) -> Result<(f64, Vec<f64>)> {
    if x.n_features() != model.n_inputs {
        return Err(Error::structural(format!(
            "matrix of width {} for a network over {} inputs",
            x.n_features(),
            model.n_inputs
        )));
    }
    if y.len() != x.n_rows() {
        return Err(Error::structural(format!(
            "{} labels for {} rows",
            y.len(),
            x.n_rows()
        )));
    }
    let all: Vec<usize>;
    let rows = match rows {
        Some(r) => r,
        None => {
            all = (0..x.n_rows()).collect();
            &all
        }
    };
    if rows.is_empty() {
        return Err(Error::structural("loss needs at least one row"));
    }
    let d = model.n_inputs;
    let h = model.hidden;
    let mut loss = 0.0;
    let mut gw1 = vec![0.0; h * d];
    let mut gb1 = vec![0.0; h];
    let mut gw2 = vec![0.0; h];
    let mut gb2 = 0.0;
    let mut act = vec![0.0; h];
    for &i in rows {
        if i >= x.n_rows() {
            return Err(Error::structural(format!("row index {i} out of range")));
        }
        let row = x.row(i);
        let mut s = model.b2;
        for k in 0..h {
            let mut a = model.b1[k];
            let w_row = &model.w1[k * d..(k + 1) * d];
            for j in 0..d {
                a += w_row[j] * row[j];
            }
            let hk = a.max(0.0);
            act[k] = hk;
            s += model.w2[k] * hk;
        }
        let t = if y.value(i) { 1.0 } else { 0.0 };
        loss += s.max(0.0) - t * s + (-s.abs()).exp().ln_1p();
        let r = sigmoid(s) - t;
        gb2 += r;
        for k in 0..h {
            gw2[k] += r * act[k];
            if act[k] > 0.0 {
                let da = r * model.w2[k];
                gb1[k] += da;
                let g_row = &mut gw1[k * d..(k + 1) * d];
                for j in 0..d {
                    g_row[j] += da * row[j];
                }
            }
        }
    }
    let inv_n = 1.0 / rows.len() as f64;
    loss *= inv_n;
    gb2 *= inv_n;
    for v in gw1.iter_mut().chain(gb1.iter_mut()).chain(gw2.iter_mut()) {
        *v *= inv_n;
    }
    for (g, w) in gw1.iter_mut().zip(&model.w1) {
        loss += 0.5 * l2 * w * w;
        *g += l2 * w;
    }
    for (g, w) in gw2.iter_mut().zip(&model.w2) {
        loss += 0.5 * l2 * w * w;
        *g += l2 * w;
    }
    let mut grad = gw1;
    grad.extend_from_slice(&gb1);
    grad.extend_from_slice(&gw2);
    grad.push(gb2);
    Ok((loss, grad))
}

/// Defaults tuned for mini-batch descent on standardized inputs; the shared
/// hyperparameter defaults are sized for full-batch regression and run too
/// hot here.
pub fn mlp_default_hyper() -> TrainHyper {
    TrainHyper {
        learning_rate: 0.1,
        l2_strength: 1e-4,
        max_epochs: 300,
        tolerance: 1e-7,
        seed: 0,
    }
}

/// Mini-batch training with a seed-deterministic shuffle each epoch.
pub fn mlp_train(
    z: &FeatureMatrix,
    y: &Labels,
    hidden: usize,
    batch_size: usize,
    hyper: &TrainHyper,
) -> Result<MlpModel> {
    hyper.validate()?;
    if batch_size == 0 {
        return Err(Error::config("batch size must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut model = MlpModel::init_seeded(z.n_features(), hidden, &mut rng)?;
    let n_params = model.flat_params().len();
    let mut order: Vec<usize> = (0..z.n_rows()).collect();
    for _ in 0..hyper.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(batch_size) {
            let (batch_loss, grad) =
                mlp_loss_grad(&model, z, y, hyper.l2_strength, Some(batch))?;
            if !batch_loss.is_finite() {
                return Err(Error::training("network loss diverged to a non-finite value"));
            }
            let mut params = model.flat_params();
            for p in 0..n_params {
                params[p] -= hyper.learning_rate * grad[p];
            }
            model.set_flat_params(&params)?;
        }
        let (full_loss, full_grad) = mlp_loss_grad(&model, z, y, hyper.l2_strength, None)?;
        if !full_loss.is_finite() {
            return Err(Error::training("network loss diverged to a non-finite value"));
        }
        let grad_norm = full_grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if grad_norm <= hyper.tolerance {
            break;
        }
    }
    if model.flat_params().iter().any(|p| !p.is_finite()) {
        return Err(Error::training("network parameters are not finite"));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(bits: &[u8]) -> Labels {
        Labels::new(bits.iter().map(|&b| b == 1).collect()).unwrap()
    }

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("f{j}")).collect()
    }

    fn xor_data() -> (FeatureMatrix, Labels) {
        let rows = vec![
            vec![-1.0, -1.0],
            vec![-1.0, 1.0],
            vec![1.0, -1.0],
            vec![1.0, 1.0],
        ];
        (FeatureMatrix::from_rows(&rows, names(2)).unwrap(), labels(&[0, 1, 1, 0]))
    }

    fn random_instance(seed: u64, n: usize, d: usize) -> (FeatureMatrix, Labels) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let mut bits: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
        bits[0] = 1;
        bits[1] = 0;
        (FeatureMatrix::from_rows(&rows, names(d)).unwrap(), labels(&bits))
    }

    #[test]
    fn xor_trains_to_perfect_accuracy() {
        let (x, y) = xor_data();
        let hyper = TrainHyper {
            learning_rate: 0.5,
            l2_strength: 0.0,
            max_epochs: 4000,
            tolerance: 1e-9,
            seed: 7,
        };
        let model = mlp_train(&x, &y, 8, 4, &hyper).unwrap();
        let preds = model.predict(&x).unwrap();
        let correct =
            preds.iter().zip(y.values()).filter(|(p, t)| *p == *t).count();
        assert_eq!(correct, 4, "predictions {preds:?}");
    }

    #[test]
    fn training_reduces_the_loss() {
        let (x, y) = random_instance(2, 60, 3);
        let hyper = mlp_default_hyper();
        let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
        let init = MlpModel::init_seeded(3, 16, &mut rng).unwrap();
        let (loss_before, _) = mlp_loss_grad(&init, &x, &y, hyper.l2_strength, None).unwrap();
        let model = mlp_train(&x, &y, 16, 16, &hyper).unwrap();
        let (loss_after, _) = mlp_loss_grad(&model, &x, &y, hyper.l2_strength, None).unwrap();
        assert!(
            loss_after < loss_before * 0.9,
            "loss went {loss_before} -> {loss_after}"
        );
    }

    #[test]
    fn gradients_match_central_differences() {
        for seed in 0..5u64 {
            let (x, y) = random_instance(seed, 10, 3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x77);
            let model = MlpModel::init_seeded(3, 4, &mut rng).unwrap();
            let l2 = 1e-3;
            let (_, analytic) = mlp_loss_grad(&model, &x, &y, l2, None).unwrap();
            let base = model.flat_params();
            let h = 1e-6;
            let mut numeric = Vec::with_capacity(base.len());
            for p in 0..base.len() {
                let mut probe = model.clone();
                let mut params = base.clone();
                params[p] += h;
                probe.set_flat_params(&params).unwrap();
                let (hi, _) = mlp_loss_grad(&probe, &x, &y, l2, None).unwrap();
                params[p] -= 2.0 * h;
                probe.set_flat_params(&params).unwrap();
                let (lo, _) = mlp_loss_grad(&probe, &x, &y, l2, None).unwrap();
                numeric.push((hi - lo) / (2.0 * h));
            }
            let diff: f64 = analytic
                .iter()
                .zip(&numeric)
                .map(|(a, n)| (a - n) * (a - n))
                .sum::<f64>()
                .sqrt();
            let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt()
                + numeric.iter().map(|n| n * n).sum::<f64>().sqrt();
            let rel = diff / scale.max(1e-12);
            assert!(rel < 1e-3, "seed {seed}: relative gradient error {rel}");
        }
    }

    #[test]
    fn identical_hidden_units_receive_identical_gradients() {
        // a symmetric start can never separate its hidden units: their
        // gradient rows coincide, so descent preserves the tie
        let (x, y) = random_instance(4, 12, 2);
        let mut model = MlpModel {
            n_inputs: 2,
            hidden: 3,
            w1: vec![0.3, -0.2, 0.3, -0.2, 0.3, -0.2],
            b1: vec![0.1; 3],
            w2: vec![0.5; 3],
            b2: 0.0,
        };
        let (_, grad) = mlp_loss_grad(&model, &x, &y, 0.0, None).unwrap();
        assert_eq!(grad[0..2], grad[2..4]);
        assert_eq!(grad[2..4], grad[4..6]);
        assert_eq!(grad[6], grad[7]);

        // the seeded initializer starts them distinct
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        model = MlpModel::init_seeded(2, 3, &mut rng).unwrap();
        assert_ne!(model.w1[0..2], model.w1[2..4]);
    }

    #[test]
    fn training_is_seed_deterministic() {
        let (x, y) = random_instance(6, 30, 2);
        let hyper = TrainHyper { max_epochs: 30, ..mlp_default_hyper() };
        let a = mlp_train(&x, &y, 8, 8, &hyper).unwrap();
        let b = mlp_train(&x, &y, 8, 8, &hyper).unwrap();
        assert_eq!(a, b);
        let c = mlp_train(&x, &y, 8, 8, &TrainHyper { seed: 1, ..hyper }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn scores_are_probabilities() {
        let (x, y) = random_instance(8, 20, 2);
        let hyper = TrainHyper { max_epochs: 20, ..mlp_default_hyper() };
        let model = mlp_train(&x, &y, 8, 8, &hyper).unwrap();
        for p in model.predict_proba(&x).unwrap() {
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn flat_params_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = MlpModel::init_seeded(4, 5, &mut rng).unwrap();
        let mut copy = model.clone();
        let p = model.flat_params();
        assert_eq!(p.len(), 5 * 4 + 5 + 5 + 1);
        copy.set_flat_params(&p).unwrap();
        assert_eq!(model, copy);
        assert!(copy.set_flat_params(&p[1..]).is_err());
    }
}
