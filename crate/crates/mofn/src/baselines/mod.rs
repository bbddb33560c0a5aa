//! Comparison models: a constant majority-class predictor, mean-threshold
//! binarization with unit weighting, soft-threshold joint training, a small
//! neural network, and the exact solver re-run on fixed mean thresholds.
//!
//! Everything here shares the evaluation conventions of the core model, so
//! checklist-shaped baselines produce genuine [`Checklist`] values and the
//! rest expose probability scores.

mod mlp;
mod sets;

pub use mlp::{mlp_default_hyper, mlp_loss_grad, mlp_train, MlpModel};
pub use sets::{sets_loss_grad, sets_train, sets_train_configured, SetsModel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{train_logistic_raw, TrainHyper};
use crate::model::{
    objective_from_errors, Checklist, ConceptRule, FeatureMatrix, Labels, ObjectiveWeights,
};
use crate::solver::{solve_fixed_thresholds, SolveResult, SolverConfig};

/// Constant classifier fixed to the majority training class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DummyModel {
    pub predict_positive: bool,
}

/// Majority class of the training labels; an exact tie predicts negative.
pub fn dummy_fit(y: &Labels) -> DummyModel {
    DummyModel { predict_positive: y.n_pos() > y.n_neg() }
}

impl DummyModel {
    pub fn predict(&self, n: usize) -> Vec<bool> {
        vec![self.predict_positive; n]
    }
}

/// 0/1 matrix with entry 1 exactly when the raw value strictly exceeds its
/// column threshold; a value equal to the threshold maps to 0, matching
/// rule evaluation everywhere else.
pub fn binarize_at(x: &FeatureMatrix, thresholds: &[f64]) -> Result<FeatureMatrix> {
    if thresholds.len() != x.n_features() {
        return Err(Error::structural(format!(
            "{} thresholds for {} features",
            thresholds.len(),
            x.n_features()
        )));
    }
    if thresholds.iter().any(|t| !t.is_finite()) {
        return Err(Error::structural("binarization thresholds must be finite"));
    }
    let mut values = Vec::with_capacity(x.n_rows() * x.n_features());
    for i in 0..x.n_rows() {
        for j in 0..x.n_features() {
            values.push(if x.value(i, j) > thresholds[j] { 1.0 } else { 0.0 });
        }
    }
    FeatureMatrix::new(values, x.n_rows(), x.n_features(), x.feature_names().to_vec())
}

/// Settings for turning regression weights into unit-weight rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitWeightingConfig {
    /// Coefficients in the closed interval `[-beta, beta]` are dropped.
    pub beta: f64,
}

impl Default for UnitWeightingConfig {
    fn default() -> Self {
        Self { beta: 0.1 }
    }
}

impl UnitWeightingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::config(format!(
                "weight filter width must be a finite value >= 0, got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Sign-and-filter step shared by the unit-weighting path: weights are in
/// per-column slots, positive survivors become "x > t" rules and negative
/// survivors become the complement "x <= t".
fn rules_from_weights(
    weights_by_column: &[(usize, f64)],
    thresholds: &[f64],
    beta: f64,
) -> Vec<ConceptRule> {
    let mut rules = Vec::new();
    for &(j, w) in weights_by_column {
        if w.abs() <= beta {
            continue;
        }
        rules.push(if w > 0.0 {
            ConceptRule::above(j, thresholds[j])
        } else {
            ConceptRule::at_or_below(j, thresholds[j])
        });
    }
    rules
}

/// Checklist from logistic regression on binarized features: each surviving
/// coefficient contributes one unit-weight rule, and the required count M is
/// whichever value of `1..=N` minimizes the training objective.
pub fn unit_weighting(
    x: &FeatureMatrix,
    y: &Labels,
    thresholds: &[f64],
    hyper: &TrainHyper,
    config: &UnitWeightingConfig,
    objective: &ObjectiveWeights,
) -> Result<Checklist> {
    config.validate()?;
    let binary = binarize_at(x, thresholds)?;
    let (model, kept) = train_logistic_raw(&binary, y, hyper)?;
    let by_column: Vec<(usize, f64)> =
        kept.iter().copied().zip(model.weights.iter().copied()).collect();
    let rules = rules_from_weights(&by_column, thresholds, config.beta);
    if rules.is_empty() {
        return Err(Error::Degenerate(format!(
            "every regression weight fell inside [-{0}, {0}]; retry with a smaller filter width",
            config.beta
        )));
    }
    let n_rules = rules.len();
    let mut best_m = 1;
    let mut best_obj = f64::INFINITY;
    for m in 1..=n_rules {
        let counts = Checklist::new(rules.clone(), m)?.evaluate(x, y)?;
        let obj = objective_from_errors(counts.l_plus(), counts.l_minus(), n_rules, m, objective);
        if obj < best_obj {
            best_obj = obj;
            best_m = m;
        }
    }
    Checklist::new(rules, best_m)
}

/// Soft-threshold model reduced to a hard checklist: binarize at the learned
/// cut points, then unit-weight the result.
pub fn sets_to_checklist(
    model: &SetsModel,
    x: &FeatureMatrix,
    y: &Labels,
    hyper: &TrainHyper,
    config: &UnitWeightingConfig,
    objective: &ObjectiveWeights,
) -> Result<Checklist> {
    unit_weighting(x, y, &model.phi, hyper, config, objective)
}

/// Per-column arithmetic means.
pub fn column_means(x: &FeatureMatrix) -> Vec<f64> {
    let mut means = vec![0.0; x.n_features()];
    for i in 0..x.n_rows() {
        for j in 0..x.n_features() {
            means[j] += x.value(i, j);
        }
    }
    for m in &mut means {
        *m /= x.n_rows() as f64;
    }
    means
}

/// The exact solver restricted to one candidate per feature: the training
/// mean. Optimizes rule selection and M only.
pub fn mean_threshold_solve(
    x: &FeatureMatrix,
    y: &Labels,
    config: &SolverConfig,
) -> Result<SolveResult> {
    solve_fixed_thresholds(x, y, &column_means(x), config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{apply_concepts, RuleDirection};

    fn labels(bits: &[u8]) -> Labels {
        Labels::new(bits.iter().map(|&b| b == 1).collect()).unwrap()
    }

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("f{j}")).collect()
    }

    #[test]
    fn dummy_majority_and_tie_rules() {
        let mut y = vec![0u8; 63];
        y.extend(vec![1u8; 37]);
        assert!(!dummy_fit(&labels(&y)).predict_positive);
        assert!(dummy_fit(&labels(&[1, 1, 1])).predict_positive);
        assert!(!dummy_fit(&labels(&[0, 1, 0, 1])).predict_positive);
        assert_eq!(dummy_fit(&labels(&[1, 1])).predict(3), vec![true; 3]);
    }

    #[test]
    fn binarize_examples() {
        let x = FeatureMatrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]], names(1)).unwrap();
        let col = |b: &FeatureMatrix| (0..3).map(|i| b.value(i, 0)).collect::<Vec<_>>();
        assert_eq!(col(&binarize_at(&x, &[2.0]).unwrap()), vec![0.0, 0.0, 1.0]);
        assert_eq!(col(&binarize_at(&x, &[0.5]).unwrap()), vec![1.0, 1.0, 1.0]);
        // threshold exactly at the max: ties go to 0
        assert_eq!(col(&binarize_at(&x, &[3.0]).unwrap()), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn binarize_rejects_bad_thresholds() {
        let x = FeatureMatrix::from_rows(&[vec![1.0, 2.0]], names(2)).unwrap();
        assert!(binarize_at(&x, &[1.0]).is_err());
        assert!(binarize_at(&x, &[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn binarize_agrees_with_rule_evaluation() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> =
            (0..20).map(|_| (0..3).map(|_| rng.gen_range(-4.0..4.0)).collect()).collect();
        let x = FeatureMatrix::from_rows(&rows, names(3)).unwrap();
        let t = [0.5, -1.0, 2.0];
        let rules: Vec<ConceptRule> =
            (0..3).map(|j| ConceptRule::above(j, t[j])).collect();
        let b = binarize_at(&x, &t).unwrap();
        for i in 0..x.n_rows() {
            let via_rules = apply_concepts(x.row(i), &rules).unwrap();
            for j in 0..3 {
                assert_eq!(b.value(i, j) == 1.0, via_rules[j], "row {i} col {j}");
            }
        }
    }

    #[test]
    fn weight_filter_and_signs() {
        let t = [10.0, 20.0, 30.0];
        let by_column = [(0usize, 0.8), (1, -0.6), (2, 0.05)];
        let rules = rules_from_weights(&by_column, &t, 0.1);
        assert_eq!(rules.len(), 2);
        assert_eq!(rules[0].feature_index, 0);
        assert_eq!(rules[0].direction, RuleDirection::Above);
        assert_eq!(rules[0].threshold, 10.0);
        assert_eq!(rules[1].feature_index, 1);
        assert_eq!(rules[1].direction, RuleDirection::AtOrBelow);
        assert_eq!(rules[1].threshold, 20.0);
    }

    #[test]
    fn zero_beta_keeps_every_nonzero_weight() {
        let t = [0.0, 0.0, 0.0];
        let by_column = [(0usize, 0.001), (1, 0.0), (2, -0.002)];
        let rules = rules_from_weights(&by_column, &t, 0.0);
        assert_eq!(rules.len(), 2);
        // the boundary itself is dropped: the filter interval is closed
        let boundary = rules_from_weights(&[(0, 0.1), (1, -0.1)], &t[..2], 0.1);
        assert!(boundary.is_empty());
    }

    /// AND of two binary indicators, replicated for a stable regression fit.
    fn and_data() -> (FeatureMatrix, Labels) {
        let mut rows = Vec::new();
        let mut bits = Vec::new();
        for _ in 0..3 {
            for (a, b) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
                rows.push(vec![a, b]);
                bits.push(u8::from(a == 1.0 && b == 1.0));
            }
        }
        (FeatureMatrix::from_rows(&rows, names(2)).unwrap(), labels(&bits))
    }

    #[test]
    fn unit_weighting_learns_the_conjunction() {
        let (x, y) = and_data();
        let hyper = TrainHyper::default();
        let objective = ObjectiveWeights::with_default_eps(1.0, x.n_features()).unwrap();
        let cl = unit_weighting(
            &x,
            &y,
            &[0.5, 0.5],
            &hyper,
            &UnitWeightingConfig::default(),
            &objective,
        )
        .unwrap();
        assert_eq!(cl.n_rules(), 2);
        assert_eq!(cl.m_required(), 2);
        let counts = cl.evaluate(&x, &y).unwrap();
        assert_eq!((counts.l_plus(), counts.l_minus()), (0, 0));
        assert!(cl.rules().iter().all(|r| r.direction == RuleDirection::Above));
    }

    #[test]
    fn unit_weighting_complements_anti_predictive_features() {
        // y follows f0 and anti-follows f1
        let mut rows = Vec::new();
        let mut bits = Vec::new();
        for _ in 0..3 {
            for (a, b, t) in [
                (1.0, 0.0, 1u8),
                (1.0, 0.0, 1),
                (0.0, 1.0, 0),
                (0.0, 1.0, 0),
            ] {
                rows.push(vec![a, b]);
                bits.push(t);
            }
        }
        let x = FeatureMatrix::from_rows(&rows, names(2)).unwrap();
        let y = labels(&bits);
        let objective = ObjectiveWeights::with_default_eps(1.0, 2).unwrap();
        let cl = unit_weighting(
            &x,
            &y,
            &[0.5, 0.5],
            &TrainHyper::default(),
            &UnitWeightingConfig::default(),
            &objective,
        )
        .unwrap();
        let dirs: Vec<RuleDirection> = cl.rules().iter().map(|r| r.direction).collect();
        assert!(dirs.contains(&RuleDirection::AtOrBelow));
        let counts = cl.evaluate(&x, &y).unwrap();
        assert_eq!((counts.l_plus(), counts.l_minus()), (0, 0));
    }

    #[test]
    fn unit_weighting_overwide_filter_is_degenerate() {
        let (x, y) = and_data();
        let objective = ObjectiveWeights::with_default_eps(1.0, 2).unwrap();
        let err = unit_weighting(
            &x,
            &y,
            &[0.5, 0.5],
            &TrainHyper::default(),
            &UnitWeightingConfig { beta: 1e6 },
            &objective,
        )
        .unwrap_err();
        match err {
            Error::Degenerate(msg) => assert!(msg.contains("smaller filter width")),
            other => panic!("expected degenerate-model error, got {other:?}"),
        }
    }

    #[test]
    fn mean_threshold_solve_uses_the_column_means() {
        let (x, y) = and_data();
        assert_eq!(column_means(&x), vec![0.5, 0.5]);
        let config = SolverConfig::for_matrix(&x, 1.0).unwrap();
        let result = mean_threshold_solve(&x, &y, &config).unwrap();
        assert!(result.certified_optimal);
        for rule in result.best.rules() {
            assert_eq!(rule.threshold, 0.5);
        }
        let counts = result.best.evaluate(&x, &y).unwrap();
        assert_eq!((counts.l_plus(), counts.l_minus()), (0, 0));
    }
}
