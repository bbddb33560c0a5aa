//! Exact checklist optimization.
//!
//! The continuous threshold search is reduced to data-induced candidates
//! (see [`candidate_thresholds`]) and solved to proven optimality by
//! branch-and-bound with an admissible bound. The same engine solves the
//! fixed-threshold special case by shrinking each feature's candidate list
//! to a single value, and a capped brute-force enumerator serves as an
//! independent correctness oracle. [`export_mip_form`] writes the big-M
//! integer program itself in LP text form for cross-checking against an
//! external solver.

mod brute;
mod candidates;
mod mip_text;
mod search;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Checklist, ConceptRule, Labels, ObjectiveWeights};
use crate::FeatureMatrix;

pub use brute::{brute_force_oracle, OracleCaps};
pub use candidates::{candidate_thresholds, CandidateSet};
pub use mip_text::export_mip_form;
pub use search::{bound_partial, SearchState};

/// Settings for one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub weights: ObjectiveWeights,
    /// Cap on the number of rules N.
    pub max_rules: usize,
    /// Inclusive range of M values to consider.
    pub m_range: (usize, usize),
    /// Wall-clock budget in seconds; on exhaustion the incumbent and a
    /// valid lower bound are still returned.
    pub time_budget: f64,
    /// Per-feature big-M constants for the exported integer program; when
    /// absent they default to the feature range plus two.
    pub big_a: Option<Vec<f64>>,
    /// Big-M constant for the misclassification indicators; defaults to
    /// the feature count plus one.
    pub big_b: Option<f64>,
    /// Recorded for provenance in reports. The search itself is
    /// deterministic and draws no random numbers.
    pub seed: u64,
}

impl SolverConfig {
    /// Defaults sized for `x`: every feature allowed, all M values, default
    /// conciseness penalties for the given trade-off `lambda`.
    pub fn for_matrix(x: &FeatureMatrix, lambda: f64) -> Result<Self> {
        let d = x.n_features();
        Ok(Self {
            weights: ObjectiveWeights::with_default_eps(lambda, d)?,
            max_rules: d,
            m_range: (1, d),
            time_budget: 60.0,
            big_a: None,
            big_b: None,
            seed: 0,
        })
    }

    /// Checks internal consistency and consistency with `x`.
    pub fn validate(&self, x: &FeatureMatrix) -> Result<()> {
        let d = x.n_features();
        if self.max_rules == 0 {
            return Err(Error::config("max_rules must be at least 1"));
        }
        if !(self.time_budget > 0.0) {
            return Err(Error::config("time_budget must be positive"));
        }
        let (lo, hi) = self.m_range;
        if lo == 0 || lo > hi {
            return Err(Error::config(format!("m_range {lo}..={hi} is empty or starts at 0")));
        }
        if lo > hi.min(self.max_rules).min(d) {
            return Err(Error::config(format!(
                "m_range {lo}..={hi} admits no feasible checklist with {d} features and \
                 max_rules {}",
                self.max_rules
            )));
        }
        if let Some(big_a) = &self.big_a {
            if big_a.len() != d {
                return Err(Error::config(format!(
                    "big_a has {} entries for {d} features",
                    big_a.len()
                )));
            }
            for (j, &a) in big_a.iter().enumerate() {
                let col = x.column(j);
                let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if !(a >= max - min) {
                    return Err(Error::config(format!(
                        "big_a[{j}] = {a} is below the feature range {}",
                        max - min
                    )));
                }
            }
        }
        if let Some(b) = self.big_b {
            if !(b >= (d + 1) as f64) {
                return Err(Error::config(format!(
                    "big_b = {b} is below the feature count plus one"
                )));
            }
        }
        Ok(())
    }

    /// The per-feature big-M constants, derived from `x` when unset.
    pub fn resolved_big_a(&self, x: &FeatureMatrix) -> Vec<f64> {
        match &self.big_a {
            Some(a) => a.clone(),
            None => (0..x.n_features())
                .map(|j| {
                    let col = x.column(j);
                    let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
                    let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    (max - min) + 2.0
                })
                .collect(),
        }
    }

    /// The misclassification big-M constant, derived from `x` when unset.
    pub fn resolved_big_b(&self, x: &FeatureMatrix) -> f64 {
        self.big_b.unwrap_or((x.n_features() + 1) as f64)
    }
}

/// Outcome of a solve: the best checklist found plus the certificate data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResult {
    pub best: Checklist,
    pub objective: f64,
    pub lower_bound: f64,
    pub certified_optimal: bool,
    pub nodes_explored: u64,
    /// Measured, so excluded from serialized artifacts to keep them
    /// reproducible; the console display still shows it.
    #[serde(skip)]
    pub wall_time: f64,
}

impl SolveResult {
    /// Structured text form of the result. Excludes wall time so that the
    /// same solve always renders byte-identical output.
    pub fn render_report(&self, feature_names: &[String]) -> Result<String> {
        let mut out = String::new();
        out.push_str(&format!("objective        {}\n", self.objective));
        out.push_str(&format!("lower_bound      {}\n", self.lower_bound));
        out.push_str(&format!(
            "certificate      {}\n",
            if self.certified_optimal { "optimal" } else { "incumbent" }
        ));
        out.push_str(&format!("nodes_explored   {}\n", self.nodes_explored));
        out.push_str("checklist:\n");
        for line in self.best.render_text(feature_names)?.lines() {
            out.push_str("  ");
            out.push_str(line);
            out.push('\n');
        }
        Ok(out)
    }
}

impl std::fmt::Display for SolveResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "objective        {}", self.objective)?;
        writeln!(f, "lower_bound      {}", self.lower_bound)?;
        writeln!(
            f,
            "certificate      {}",
            if self.certified_optimal { "optimal" } else { "incumbent" }
        )?;
        writeln!(f, "nodes_explored   {}", self.nodes_explored)?;
        writeln!(f, "wall_time        {:.3}s", self.wall_time)?;
        write!(
            f,
            "checklist        {} of {} required",
            self.best.m_required(),
            self.best.n_rules()
        )
    }
}

fn check_inputs(x: &FeatureMatrix, y: &Labels, candidates: &CandidateSet) -> Result<()> {
    if y.len() != x.n_rows() {
        return Err(Error::structural(format!(
            "{} labels for {} rows",
            y.len(),
            x.n_rows()
        )));
    }
    candidates.check_against(x)
}

/// Finds a checklist minimizing the training objective over every subset of
/// features, every candidate threshold per chosen feature, and every M in
/// the configured range.
///
/// When `certified_optimal` is set, the objective is the exact global
/// minimum over all real thresholds as well: any real threshold induces the
/// same predictions as one of the candidates. On budget exhaustion the best
/// incumbent is returned with a still-valid lower bound.
pub fn solve_checklist(
    x: &FeatureMatrix,
    y: &Labels,
    candidates: &CandidateSet,
    config: &SolverConfig,
) -> Result<SolveResult> {
    check_inputs(x, y, candidates)?;
    config.validate(x)?;
    let (m_lo, m_hi) = config.m_range;
    let m_hi = m_hi.min(config.max_rules).min(x.n_features());
    let engine = search::Engine::new(
        x,
        y,
        candidates,
        config.weights.clone(),
        config.max_rules.min(x.n_features()),
        m_lo,
        m_hi,
        config.time_budget,
    );
    let outcome = engine.run();
    let rules: Vec<ConceptRule> = outcome
        .rules
        .iter()
        .map(|&(j, k)| ConceptRule::above(j, candidates.feature(j)[k]))
        .collect();
    let best = Checklist::new(rules, outcome.m)?;
    Ok(SolveResult {
        best,
        objective: outcome.objective,
        lower_bound: outcome.lower_bound,
        certified_optimal: outcome.lower_bound == outcome.objective,
        nodes_explored: outcome.nodes,
        wall_time: outcome.wall_time,
    })
}

/// [`solve_checklist`] with each feature's threshold frozen to `fixed_t`;
/// only the subset of rules and M remain free. With column means as the
/// fixed thresholds this is checklist learning over mean-binarized
/// features.
pub fn solve_fixed_thresholds(
    x: &FeatureMatrix,
    y: &Labels,
    fixed_t: &[f64],
    config: &SolverConfig,
) -> Result<SolveResult> {
    if fixed_t.len() != x.n_features() {
        return Err(Error::structural(format!(
            "{} fixed thresholds for {} features",
            fixed_t.len(),
            x.n_features()
        )));
    }
    let candidates = CandidateSet::fixed(fixed_t)?;
    solve_checklist(x, y, &candidates, config)
}
