//! Exhaustive enumeration oracle for small instances.
//!
//! Walks every feature subset, every threshold assignment over the subset,
//! and every feasible M, evaluating each completed checklist directly. The
//! only logic shared with the branch-and-bound engine is the objective
//! formula itself, so agreement between the two is meaningful evidence.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::model::{objective_from_errors, Checklist, ConceptRule, Labels};
use crate::solver::candidates::CandidateSet;
use crate::solver::{SolveResult, SolverConfig};
use crate::FeatureMatrix;

/// Instance-size limits; anything above them is refused outright so a test
/// cannot silently take combinatorial time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleCaps {
    pub max_features: usize,
    pub max_candidates_per_feature: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        Self { max_features: 6, max_candidates_per_feature: 8 }
    }
}

/// Tie order among equal-objective checklists: fewer rules first, then
/// smaller M, then lexicographic feature and candidate indices.
type TieKey = (usize, usize, Vec<usize>, Vec<usize>);

/// Global optimum by direct enumeration.
pub fn brute_force_oracle(
    x: &FeatureMatrix,
    y: &Labels,
    candidates: &CandidateSet,
    config: &SolverConfig,
    caps: OracleCaps,
) -> Result<SolveResult> {
    let started = Instant::now();
    if y.len() != x.n_rows() {
        return Err(Error::structural(format!("{} labels for {} rows", y.len(), x.n_rows())));
    }
    candidates.check_against(x)?;
    config.validate(x)?;
    let d = x.n_features();
    if d > caps.max_features.min(62) {
        return Err(Error::OracleRefused(format!(
            "{d} features exceed the cap of {}",
            caps.max_features.min(62)
        )));
    }
    if candidates.max_per_feature() > caps.max_candidates_per_feature {
        return Err(Error::OracleRefused(format!(
            "{} candidates on one feature exceed the cap of {}",
            candidates.max_per_feature(),
            caps.max_candidates_per_feature
        )));
    }

    // concept columns for every (feature, candidate) pair
    let concept: Vec<Vec<Vec<bool>>> = (0..d)
        .map(|j| {
            let col = x.column(j);
            candidates
                .feature(j)
                .iter()
                .map(|&t| col.iter().map(|&v| v > t).collect())
                .collect()
        })
        .collect();

    let (m_lo, m_hi) = config.m_range;
    let mut best: Option<(f64, TieKey, Vec<(usize, usize)>, usize)> = None;
    let mut evaluated: u64 = 0;

    for mask in 1u64..(1u64 << d) {
        let feats: Vec<usize> = (0..d).filter(|j| mask >> j & 1 == 1).collect();
        let n_rules = feats.len();
        if n_rules > config.max_rules {
            continue;
        }
        // mixed-radix counter over candidate choices for the subset
        let mut pick = vec![0usize; n_rules];
        loop {
            let mut counts = vec![0u32; x.n_rows()];
            for (slot, &j) in feats.iter().enumerate() {
                for (i, &hit) in concept[j][pick[slot]].iter().enumerate() {
                    if hit {
                        counts[i] += 1;
                    }
                }
            }
            for m in m_lo.max(1)..=m_hi.min(n_rules) {
                evaluated += 1;
                let mut l_plus = 0usize;
                let mut l_minus = 0usize;
                for (i, &c) in counts.iter().enumerate() {
                    let predicted = c as usize >= m;
                    if y.value(i) {
                        if !predicted {
                            l_plus += 1;
                        }
                    } else if predicted {
                        l_minus += 1;
                    }
                }
                let objective =
                    objective_from_errors(l_plus, l_minus, n_rules, m, &config.weights);
                let key: TieKey = (n_rules, m, feats.clone(), pick.clone());
                let better = match &best {
                    None => true,
                    Some((b_obj, b_key, _, _)) => {
                        objective < *b_obj || (objective == *b_obj && key < *b_key)
                    }
                };
                if better {
                    let rules: Vec<(usize, usize)> =
                        feats.iter().copied().zip(pick.iter().copied()).collect();
                    best = Some((objective, key, rules, m));
                }
            }
            // advance the counter
            let mut slot = 0;
            loop {
                if slot == n_rules {
                    break;
                }
                pick[slot] += 1;
                if pick[slot] < candidates.feature(feats[slot]).len() {
                    break;
                }
                pick[slot] = 0;
                slot += 1;
            }
            if slot == n_rules {
                break;
            }
        }
    }

    let (objective, _, rules, m) = best.ok_or_else(|| {
        Error::config("the configured m_range admits no checklist on this instance")
    })?;
    let rules: Vec<ConceptRule> = rules
        .iter()
        .map(|&(j, k)| ConceptRule::above(j, candidates.feature(j)[k]))
        .collect();
    Ok(SolveResult {
        best: Checklist::new(rules, m)?,
        objective,
        lower_bound: objective,
        certified_optimal: true,
        nodes_explored: evaluated,
        wall_time: started.elapsed().as_secs_f64(),
    })
}
