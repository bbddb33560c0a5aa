//! Data-induced threshold candidates.
//!
//! A rule's concept column depends on its threshold only through which rows
//! fall above it, so the continuous threshold search collapses to finitely
//! many candidates per feature: the midpoints between consecutive distinct
//! column values plus one sentinel strictly above the maximum (the all-zero
//! rule). A threshold below the column minimum would turn the rule into a
//! constant-true concept, which is the always-positive classifier in
//! disguise; that classifier is deliberately outside the hypothesis class,
//! so no below-minimum candidate exists.

use crate::error::{Error, Result};
use crate::model::FeatureMatrix;

/// Sorted candidate thresholds for one column: one per realizable split,
/// ending with the sentinel that switches the rule off.
pub fn candidate_thresholds(column: &[f64]) -> Result<Vec<f64>> {
    if column.is_empty() {
        return Err(Error::structural("cannot derive candidates from an empty column"));
    }
    if let Some(v) = column.iter().find(|v| !v.is_finite()) {
        return Err(Error::structural(format!("non-finite column value {v}")));
    }
    let mut distinct: Vec<f64> = column.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    let mut out = Vec::with_capacity(distinct.len());
    for pair in distinct.windows(2) {
        out.push((pair[0] + pair[1]) / 2.0);
    }
    out.push(distinct[distinct.len() - 1] + 1.0);
    Ok(out)
}

/// Per-feature candidate thresholds, strictly increasing within a feature.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    per_feature: Vec<Vec<f64>>,
}

impl CandidateSet {
    /// Candidates induced by the columns of `x`.
    pub fn from_matrix(x: &FeatureMatrix) -> Result<Self> {
        let per_feature = (0..x.n_features())
            .map(|j| candidate_thresholds(&x.column(j)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { per_feature })
    }

    /// A singleton candidate per feature: the fixed-threshold special case.
    pub fn fixed(thresholds: &[f64]) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::structural("fixed thresholds must be non-empty"));
        }
        if let Some(t) = thresholds.iter().find(|t| !t.is_finite()) {
            return Err(Error::structural(format!("non-finite fixed threshold {t}")));
        }
        Ok(Self { per_feature: thresholds.iter().map(|&t| vec![t]).collect() })
    }

    pub fn from_lists(per_feature: Vec<Vec<f64>>) -> Result<Self> {
        for (j, list) in per_feature.iter().enumerate() {
            if list.is_empty() {
                return Err(Error::structural(format!("feature {j} has no candidates")));
            }
            if list.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::structural(format!(
                    "candidates for feature {j} are not strictly increasing"
                )));
            }
        }
        Ok(Self { per_feature })
    }

    pub fn n_features(&self) -> usize {
        self.per_feature.len()
    }

    pub fn feature(&self, j: usize) -> &[f64] {
        &self.per_feature[j]
    }

    pub fn max_per_feature(&self) -> usize {
        self.per_feature.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Must hold before a solve: one candidate list per column of `x`.
    pub fn check_against(&self, x: &FeatureMatrix) -> Result<()> {
        if self.n_features() != x.n_features() {
            return Err(Error::structural(format!(
                "candidate set covers {} features but matrix has {}",
                self.n_features(),
                x.n_features()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoints_plus_sentinel() {
        assert_eq!(candidate_thresholds(&[1.0, 3.0, 3.0, 7.0]).unwrap(), vec![2.0, 5.0, 8.0]);
    }

    #[test]
    fn constant_column_sentinel_only() {
        assert_eq!(candidate_thresholds(&[4.0, 4.0]).unwrap(), vec![5.0]);
    }

    #[test]
    fn empty_column_is_structural() {
        assert!(matches!(candidate_thresholds(&[]), Err(Error::Structural(_))));
    }

    fn concept_column(column: &[f64], t: f64) -> Vec<bool> {
        column.iter().map(|&v| v > t).collect()
    }

    // Any real threshold at or above the column minimum induces the same
    // concept column as exactly one candidate.
    #[test]
    fn every_real_threshold_maps_to_one_candidate() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let n = rng.gen_range(1..=20);
            let column: Vec<f64> =
                (0..n).map(|_| (rng.gen_range(-50..50) as f64) / 4.0).collect();
            let cands = candidate_thresholds(&column).unwrap();
            let min = column.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            // probe thresholds: every data value, nudges around each, and
            // points beyond the maximum
            let mut probes = vec![min, max, max + 3.0];
            for &v in &column {
                probes.push(v);
                probes.push(v + 1e-9);
                if v > min {
                    probes.push(v - 1e-9);
                }
            }
            for t in probes {
                if t < min {
                    continue;
                }
                let col = concept_column(&column, t);
                let matches = cands
                    .iter()
                    .filter(|&&c| concept_column(&column, c) == col)
                    .count();
                assert_eq!(matches, 1, "threshold {t} on column {column:?}");
            }
        }
    }

    // The all-ones column is intentionally not realizable: the lowest
    // candidate still leaves the minimum-valued rows unsatisfied.
    #[test]
    fn constant_true_rule_is_excluded() {
        let column = [1.0, 3.0, 7.0];
        for c in candidate_thresholds(&column).unwrap() {
            assert!(concept_column(&column, c).iter().any(|&b| !b));
        }
    }

    #[test]
    fn candidates_strictly_increasing() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let column: Vec<f64> = (0..rng.gen_range(1..30))
                .map(|_| rng.gen_range(-5.0..5.0))
                .collect();
            let cands = candidate_thresholds(&column).unwrap();
            assert!(cands.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn fixed_set_is_singletons() {
        let set = CandidateSet::fixed(&[1.0, -2.0]).unwrap();
        assert_eq!(set.n_features(), 2);
        assert_eq!(set.feature(0), &[1.0]);
        assert_eq!(set.feature(1), &[-2.0]);
    }
}
