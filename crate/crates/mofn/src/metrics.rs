//! Classification metrics, operating-point sweeps, and fold aggregation.
//!
//! Conventions are fixed here once: precision is 0 when nothing is
//! predicted positive, sweeps are step functions over observed score
//! thresholds with no interpolation, and the "±" aggregation uses the
//! population standard deviation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EvalCounts, Labels};

/// The headline metrics of one model on one evaluation split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
    /// Checklist size, when the model is a checklist.
    pub n_rules: Option<usize>,
    /// Required satisfied-rule count, when the model is a checklist.
    pub m_required: Option<usize>,
}

impl MetricSet {
    pub fn with_size(mut self, n_rules: usize, m_required: usize) -> Self {
        self.n_rules = Some(n_rules);
        self.m_required = Some(m_required);
        self
    }
}

/// Metrics from hard predictions. Ratios with an empty denominator are
/// reported as 0 (most visibly: the always-negative classifier has
/// precision 0, not NaN).
pub fn classification_metrics(y: &Labels, y_hat: &[bool]) -> Result<MetricSet> {
    let c = EvalCounts::from_predictions(y, y_hat)?;
    Ok(metrics_from_counts(&c))
}

/// The same metrics from precomputed confusion counts.
pub fn metrics_from_counts(c: &EvalCounts) -> MetricSet {
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    MetricSet {
        accuracy: ratio(c.true_pos + c.true_neg, c.total()),
        precision: ratio(c.true_pos, c.true_pos + c.false_pos),
        recall: ratio(c.true_pos, c.true_pos + c.false_neg),
        specificity: ratio(c.true_neg, c.true_neg + c.false_pos),
        n_rules: None,
        m_required: None,
    }
}

/// One point of a score sweep: predictions are `score >= threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// A value read off a sweep; `qualified` is false when no operating point
/// met the target, in which case `value` is 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepValue {
    pub value: f64,
    pub qualified: bool,
}

/// All operating points over the descending unique score thresholds.
pub fn operating_points(scores: &[f64], y: &Labels) -> Result<Vec<OperatingPoint>> {
    if scores.len() != y.len() {
        return Err(Error::structural(format!(
            "{} scores for {} labels",
            scores.len(),
            y.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::structural("scores must be finite"));
    }
    if y.n_pos() == 0 || y.n_neg() == 0 {
        return Err(Error::UndefinedMetric(
            "operating points need both classes present".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    let n_pos = y.n_pos();
    let mut points = Vec::new();
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut idx = 0;
    while idx < order.len() {
        let threshold = scores[order[idx]];
        // consume the whole tied-score group before emitting a point
        while idx < order.len() && scores[order[idx]] == threshold {
            if y.value(order[idx]) {
                tp += 1;
            } else {
                fp += 1;
            }
            idx += 1;
        }
        points.push(OperatingPoint {
            threshold,
            precision: tp as f64 / (tp + fp) as f64,
            recall: tp as f64 / n_pos as f64,
        });
    }
    Ok(points)
}

/// Precision at the operating point whose recall first clears the target:
/// among points with recall at least `target_recall`, the one with the
/// smallest recall wins, and equal recalls resolve to the higher precision.
pub fn precision_at_recall(scores: &[f64], y: &Labels, target_recall: f64) -> Result<SweepValue> {
    check_target(target_recall)?;
    let points = operating_points(scores, y)?;
    let mut best: Option<(f64, f64)> = None; // (recall, precision)
    for p in &points {
        if p.recall >= target_recall {
            let better = match best {
                None => true,
                Some((r, prec)) => {
                    p.recall < r || (p.recall == r && p.precision > prec)
                }
            };
            if better {
                best = Some((p.recall, p.precision));
            }
        }
    }
    Ok(match best {
        Some((_, precision)) => SweepValue { value: precision, qualified: true },
        None => SweepValue { value: 0.0, qualified: false },
    })
}

/// Recall at the operating point whose precision first clears the target;
/// the mirror image of [`precision_at_recall`].
pub fn recall_at_precision(scores: &[f64], y: &Labels, target_precision: f64) -> Result<SweepValue> {
    check_target(target_precision)?;
    let points = operating_points(scores, y)?;
    let mut best: Option<(f64, f64)> = None; // (precision, recall)
    for p in &points {
        if p.precision >= target_precision {
            let better = match best {
                None => true,
                Some((prec, r)) => {
                    p.precision < prec || (p.precision == prec && p.recall > r)
                }
            };
            if better {
                best = Some((p.precision, p.recall));
            }
        }
    }
    Ok(match best {
        Some((_, recall)) => SweepValue { value: recall, qualified: true },
        None => SweepValue { value: 0.0, qualified: false },
    })
}

fn check_target(target: f64) -> Result<()> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::config(format!("sweep target must be in (0, 1), got {target}")));
    }
    Ok(())
}

/// Mean and population standard deviation of one metric across folds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Mean and population standard deviation of a non-empty slice.
pub fn mean_std(values: &[f64]) -> MeanStd {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    MeanStd { mean, std: var.sqrt() }
}

/// Per-metric mean ± population std across folds. Size statistics are
/// aggregated only when every fold reports them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldAggregate {
    pub folds: usize,
    pub accuracy: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub specificity: MeanStd,
    pub n_rules: Option<MeanStd>,
    pub m_required: Option<MeanStd>,
}

pub fn aggregate_folds(per_fold: &[MetricSet]) -> Result<FoldAggregate> {
    if per_fold.is_empty() {
        return Err(Error::structural("cannot aggregate zero folds"));
    }
    let collect = |f: fn(&MetricSet) -> f64| -> Vec<f64> { per_fold.iter().map(f).collect() };
    let sizes = |f: fn(&MetricSet) -> Option<usize>| -> Option<MeanStd> {
        let vals: Option<Vec<f64>> =
            per_fold.iter().map(|m| f(m).map(|v| v as f64)).collect();
        vals.map(|v| mean_std(&v))
    };
    Ok(FoldAggregate {
        folds: per_fold.len(),
        accuracy: mean_std(&collect(|m| m.accuracy)),
        precision: mean_std(&collect(|m| m.precision)),
        recall: mean_std(&collect(|m| m.recall)),
        specificity: mean_std(&collect(|m| m.specificity)),
        n_rules: sizes(|m| m.n_rules),
        m_required: sizes(|m| m.m_required),
    })
}
