//! The checklist hypothesis class and its exact evaluation semantics.
//!
//! A checklist is an M-of-N classifier: it predicts positive for a row
//! exactly when at least `m_required` of its threshold rules are satisfied.
//! Everything here is immutable after construction and free of interior
//! mutability, so evaluation is safe from concurrent callers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An n x d grid of finite feature values with unique column names.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Vec<f64>, // row-major
    feature_names: Vec<String>,
    n: usize,
    d: usize,
}

impl FeatureMatrix {
    /// Builds a matrix from row-major values. Every value must be finite and
    /// feature names must be unique and non-empty.
    pub fn new(values: Vec<f64>, n: usize, d: usize, feature_names: Vec<String>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::structural(format!(
                "feature matrix must be non-empty, got n={n}, d={d}"
            )));
        }
        if values.len() != n * d {
            return Err(Error::structural(format!(
                "expected {} values for a {n}x{d} matrix, got {}",
                n * d,
                values.len()
            )));
        }
        if feature_names.len() != d {
            return Err(Error::structural(format!(
                "expected {d} feature names, got {}",
                feature_names.len()
            )));
        }
        for (j, name) in feature_names.iter().enumerate() {
            if feature_names[..j].contains(name) {
                return Err(Error::structural(format!("duplicate feature name {name:?}")));
            }
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::structural(format!(
                "non-finite value at row {}, column {}",
                bad / d,
                bad % d
            )));
        }
        Ok(Self { values, feature_names, n, d })
    }

    /// Convenience constructor from per-row slices.
    pub fn from_rows(rows: &[Vec<f64>], feature_names: Vec<String>) -> Result<Self> {
        let n = rows.len();
        let d = feature_names.len();
        let mut values = Vec::with_capacity(n * d);
        for row in rows {
            if row.len() != d {
                return Err(Error::structural(format!(
                    "row width {} does not match {d} feature names",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        FeatureMatrix::new(values, n, d, feature_names)
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_features(&self) -> usize {
        self.d
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.d + j]
    }

    /// Copies column `j` out of the row-major storage.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.value(i, j)).collect()
    }

    /// New matrix keeping the given columns in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Result<Self> {
        for &j in indices {
            if j >= self.d {
                return Err(Error::structural(format!(
                    "column index {j} out of range for d={}",
                    self.d
                )));
            }
        }
        let names = indices.iter().map(|&j| self.feature_names[j].clone()).collect();
        let mut values = Vec::with_capacity(self.n * indices.len());
        for i in 0..self.n {
            for &j in indices {
                values.push(self.value(i, j));
            }
        }
        FeatureMatrix::new(values, self.n, indices.len(), names)
    }

    /// New matrix keeping the given rows in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            if i >= self.n {
                return Err(Error::structural(format!(
                    "row index {i} out of range for n={}",
                    self.n
                )));
            }
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix::new(values, indices.len(), self.d, self.feature_names.clone())
    }

    /// Appends a negated copy of every column (values sign-flipped, names
    /// suffixed `_neg`), turning "x <= t" rules into plain "x > t" rules on
    /// the mirrored column. Off by default everywhere; opt in through run
    /// configuration.
    pub fn with_negated_columns(&self) -> Result<Self> {
        let mut names = self.feature_names.clone();
        names.extend(self.feature_names.iter().map(|n| format!("{n}_neg")));
        let mut values = Vec::with_capacity(self.n * self.d * 2);
        for i in 0..self.n {
            values.extend_from_slice(self.row(i));
            values.extend(self.row(i).iter().map(|v| -v));
        }
        FeatureMatrix::new(values, self.n, self.d * 2, names)
    }
}

/// Binary outcomes with the positive/negative index partition kept explicit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labels {
    y: Vec<bool>,
    pos_indices: Vec<usize>,
    neg_indices: Vec<usize>,
}

impl Labels {
    pub fn new(y: Vec<bool>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::structural("labels must be non-empty"));
        }
        let pos_indices = (0..y.len()).filter(|&i| y[i]).collect();
        let neg_indices = (0..y.len()).filter(|&i| !y[i]).collect();
        Ok(Self { y, pos_indices, neg_indices })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn value(&self, i: usize) -> bool {
        self.y[i]
    }

    pub fn values(&self) -> &[bool] {
        &self.y
    }

    pub fn pos_indices(&self) -> &[usize] {
        &self.pos_indices
    }

    pub fn neg_indices(&self) -> &[usize] {
        &self.neg_indices
    }

    pub fn n_pos(&self) -> usize {
        self.pos_indices.len()
    }

    pub fn n_neg(&self) -> usize {
        self.neg_indices.len()
    }

    /// Labels restricted to `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut y = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.y.len() {
                return Err(Error::structural(format!(
                    "label index {i} out of range for n={}",
                    self.y.len()
                )));
            }
            y.push(self.y[i]);
        }
        Labels::new(y)
    }
}

/// Direction of a threshold rule.
///
/// The solver only ever emits `Above` ("x > t"); `AtOrBelow` exists for the
/// complement rules that unit weighting produces from negative coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleDirection {
    Above,
    AtOrBelow,
}

/// One threshold rule on one feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConceptRule {
    pub feature_index: usize,
    pub threshold: f64,
    #[serde(default = "RuleDirection::above")]
    pub direction: RuleDirection,
}

impl RuleDirection {
    fn above() -> Self {
        RuleDirection::Above
    }
}

impl ConceptRule {
    /// The plain "feature > threshold" rule.
    pub fn above(feature_index: usize, threshold: f64) -> Self {
        Self { feature_index, threshold, direction: RuleDirection::Above }
    }

    /// The complement rule "feature <= threshold".
    pub fn at_or_below(feature_index: usize, threshold: f64) -> Self {
        Self { feature_index, threshold, direction: RuleDirection::AtOrBelow }
    }

    /// Rule satisfaction for a single value. Equality is the "at or below"
    /// side: `value == threshold` never satisfies an `Above` rule.
    pub fn satisfied_by(&self, value: f64) -> bool {
        match self.direction {
            RuleDirection::Above => value > self.threshold,
            RuleDirection::AtOrBelow => value <= self.threshold,
        }
    }
}

/// Evaluates every rule against one row, returning one bit per rule.
pub fn apply_concepts(row: &[f64], rules: &[ConceptRule]) -> Result<Vec<bool>> {
    let mut out = Vec::with_capacity(rules.len());
    for rule in rules {
        if rule.feature_index >= row.len() {
            return Err(Error::structural(format!(
                "rule feature index {} out of range for row of width {}",
                rule.feature_index,
                row.len()
            )));
        }
        if !rule.threshold.is_finite() {
            return Err(Error::structural("rule threshold must be finite"));
        }
        out.push(rule.satisfied_by(row[rule.feature_index]));
    }
    Ok(out)
}

/// An M-of-N checklist: an ordered rule list plus the required count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChecklistRaw", into = "ChecklistRaw")]
pub struct Checklist {
    rules: Vec<ConceptRule>,
    m_required: usize,
}

#[derive(Serialize, Deserialize)]
struct ChecklistRaw {
    rules: Vec<ConceptRule>,
    m_required: usize,
}

impl TryFrom<ChecklistRaw> for Checklist {
    type Error = Error;

    fn try_from(raw: ChecklistRaw) -> Result<Self> {
        Checklist::new(raw.rules, raw.m_required)
    }
}

impl From<Checklist> for ChecklistRaw {
    fn from(c: Checklist) -> Self {
        ChecklistRaw { rules: c.rules, m_required: c.m_required }
    }
}

impl Checklist {
    /// Validates `1 <= m_required <= rules.len()`, at most one rule per
    /// feature, and finite thresholds.
    pub fn new(rules: Vec<ConceptRule>, m_required: usize) -> Result<Self> {
        if m_required == 0 {
            return Err(Error::structural("m_required must be at least 1"));
        }
        if m_required > rules.len() {
            return Err(Error::structural(format!(
                "m_required {} exceeds rule count {}",
                m_required,
                rules.len()
            )));
        }
        for (k, rule) in rules.iter().enumerate() {
            if !rule.threshold.is_finite() {
                return Err(Error::structural("rule threshold must be finite"));
            }
            if rules[..k].iter().any(|r| r.feature_index == rule.feature_index) {
                return Err(Error::structural(format!(
                    "more than one rule on feature {}",
                    rule.feature_index
                )));
            }
        }
        Ok(Self { rules, m_required })
    }

    pub fn rules(&self) -> &[ConceptRule] {
        &self.rules
    }

    pub fn m_required(&self) -> usize {
        self.m_required
    }

    pub fn n_rules(&self) -> usize {
        self.rules.len()
    }

    /// M-of-N prediction for a single row.
    pub fn predict_row(&self, row: &[f64]) -> Result<bool> {
        let satisfied = apply_concepts(row, &self.rules)?
            .into_iter()
            .filter(|&b| b)
            .count();
        Ok(satisfied >= self.m_required)
    }

    /// Predictions for every row of a matrix.
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<bool>> {
        (0..x.n_rows()).map(|i| self.predict_row(x.row(i))).collect()
    }

    /// Confusion counts of this checklist on a labelled matrix.
    pub fn evaluate(&self, x: &FeatureMatrix, y: &Labels) -> Result<EvalCounts> {
        if x.n_rows() != y.len() {
            return Err(Error::structural(format!(
                "matrix has {} rows but labels have {}",
                x.n_rows(),
                y.len()
            )));
        }
        let mut counts = EvalCounts::default();
        for i in 0..x.n_rows() {
            counts.record(y.value(i), self.predict_row(x.row(i))?);
        }
        Ok(counts)
    }

    /// Human-readable block: one rule per line, then the M-of-N footer.
    pub fn render_text(&self, feature_names: &[String]) -> Result<String> {
        use std::fmt::Write as _;
        let mut out = String::new();
        for rule in &self.rules {
            let name = feature_names.get(rule.feature_index).ok_or_else(|| {
                Error::structural(format!(
                    "rule feature index {} out of range for {} names",
                    rule.feature_index,
                    feature_names.len()
                ))
            })?;
            let op = match rule.direction {
                RuleDirection::Above => ">",
                RuleDirection::AtOrBelow => "<=",
            };
            writeln!(out, "{name} {op} {}", rule.threshold).unwrap();
        }
        writeln!(out, "{} of {} required", self.m_required, self.rules.len()).unwrap();
        Ok(out)
    }
}

/// Trade-off weights of the training objective
/// `l+ + lambda*l- + eps_n*N + eps_m*M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    /// Cost of each misclassified negative relative to a misclassified positive.
    pub lambda: f64,
    /// Per-rule conciseness penalty.
    pub eps_n: f64,
    /// Penalty on the required count M.
    pub eps_m: f64,
}

impl ObjectiveWeights {
    pub fn new(lambda: f64, eps_n: f64, eps_m: f64) -> Result<Self> {
        for (name, v) in [("lambda", lambda), ("eps_n", eps_n), ("eps_m", eps_m)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::structural(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(Self { lambda, eps_n, eps_m })
    }

    /// Default conciseness penalties for a given feature count: small enough
    /// that the total size penalty can never trade against one
    /// misclassification.
    pub fn with_default_eps(lambda: f64, d: usize) -> Result<Self> {
        let eps = lambda.min(1.0) / (4.0 * d.max(1) as f64);
        ObjectiveWeights::new(lambda, eps, eps)
    }
}

/// Confusion cells of a checklist on a labelled dataset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

impl EvalCounts {
    pub fn record(&mut self, label: bool, prediction: bool) {
        match (label, prediction) {
            (true, true) => self.true_pos += 1,
            (true, false) => self.false_neg += 1,
            (false, true) => self.false_pos += 1,
            (false, false) => self.true_neg += 1,
        }
    }

    pub fn from_predictions(y: &Labels, predictions: &[bool]) -> Result<Self> {
        if predictions.len() != y.len() {
            return Err(Error::structural(format!(
                "{} predictions for {} labels",
                predictions.len(),
                y.len()
            )));
        }
        let mut counts = EvalCounts::default();
        for (i, &p) in predictions.iter().enumerate() {
            counts.record(y.value(i), p);
        }
        Ok(counts)
    }

    /// Misclassified positives.
    pub fn l_plus(&self) -> usize {
        self.false_neg
    }

    /// Misclassified negatives.
    pub fn l_minus(&self) -> usize {
        self.false_pos
    }

    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }
}

/// The training objective `l+ + lambda*l- + eps_n*N + eps_m*M`.
///
/// Every component of the crate computes the objective through this one
/// function so that equal count tuples always produce bit-identical values.
pub fn objective_value(
    counts: &EvalCounts,
    n_rules: usize,
    m_required: usize,
    weights: &ObjectiveWeights,
) -> f64 {
    objective_from_errors(counts.l_plus(), counts.l_minus(), n_rules, m_required, weights)
}

/// Same objective from raw error counts.
pub fn objective_from_errors(
    l_plus: usize,
    l_minus: usize,
    n_rules: usize,
    m_required: usize,
    weights: &ObjectiveWeights,
) -> f64 {
    l_plus as f64
        + weights.lambda * l_minus as f64
        + weights.eps_n * n_rules as f64
        + weights.eps_m * m_required as f64
}
