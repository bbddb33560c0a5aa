//! Depth-first branch-and-bound over (feature, candidate threshold) choices.
//!
//! The outer loop fixes M; the inner search walks features in index order,
//! branching on "skip this feature" versus each candidate threshold. A node
//! is pruned when an admissible bound on every completion reaches the
//! incumbent objective. The walk order, the greedy seeding, and the
//! strict-improvement incumbent rule are all deterministic, so repeated runs
//! produce identical results including the node count.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::model::{objective_from_errors, Labels, ObjectiveWeights};
use crate::solver::candidates::CandidateSet;
use crate::FeatureMatrix;

/// A partially explored assignment: features before `next_feature` are
/// decided (chosen or skipped), the rest are open.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchState {
    next_feature: usize,
    chosen: Vec<(usize, usize)>,
    counts: Vec<u32>,
}

impl SearchState {
    /// State with the given rules applied; `chosen` pairs are
    /// (feature index, candidate index) with strictly increasing features.
    pub fn from_choices(
        x: &FeatureMatrix,
        candidates: &CandidateSet,
        chosen: &[(usize, usize)],
        next_feature: usize,
    ) -> Result<Self> {
        candidates.check_against(x)?;
        if next_feature > x.n_features() {
            return Err(Error::structural(format!(
                "next feature {next_feature} out of range for {} features",
                x.n_features()
            )));
        }
        let mut counts = vec![0u32; x.n_rows()];
        let mut last: Option<usize> = None;
        for &(j, k) in chosen {
            if last.is_some_and(|prev| j <= prev) {
                return Err(Error::structural("chosen features must strictly increase"));
            }
            last = Some(j);
            if j >= next_feature {
                return Err(Error::structural(format!(
                    "chosen feature {j} is not before next feature {next_feature}"
                )));
            }
            if j >= x.n_features() || k >= candidates.feature(j).len() {
                return Err(Error::structural(format!("choice ({j}, {k}) out of range")));
            }
            let t = candidates.feature(j)[k];
            for i in 0..x.n_rows() {
                if x.value(i, j) > t {
                    counts[i] += 1;
                }
            }
        }
        Ok(Self { next_feature, chosen: chosen.to_vec(), counts })
    }

    pub fn next_feature(&self) -> usize {
        self.next_feature
    }

    pub fn chosen(&self) -> &[(usize, usize)] {
        &self.chosen
    }

    /// Satisfied-rule count per patient under the chosen rules.
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }
}

/// Admissible lower bound on the objective of every completion of `state`
/// into a checklist requiring `m` of its rules.
///
/// Positives are scored as if every one of the `remaining` open features
/// will contribute a satisfied rule; negatives as if none will. Rule counts
/// never decrease, so a negative already at `m` satisfied rules is a false
/// positive in every completion, and a positive that cannot reach `m` even
/// with all remaining rules is a false negative in every completion.
pub fn bound_partial(
    state: &SearchState,
    labels: &Labels,
    m: usize,
    weights: &ObjectiveWeights,
    remaining: usize,
) -> f64 {
    let mut forced_misses = 0usize;
    let mut locked_false_positives = 0usize;
    for (i, &c) in state.counts.iter().enumerate() {
        let c = c as usize;
        if labels.value(i) {
            if c + remaining < m {
                forced_misses += 1;
            }
        } else if c >= m {
            locked_false_positives += 1;
        }
    }
    objective_from_errors(forced_misses, locked_false_positives, state.chosen.len(), m, weights)
}

/// Per-feature view of the patients ordered by column value. For any
/// candidate threshold the satisfying patients form a suffix of `sorted`.
struct FeatureIndex {
    sorted: Vec<u32>,
    suffix_start: Vec<u32>,
}

fn build_feature_index(column: &[f64], cands: &[f64]) -> FeatureIndex {
    let mut sorted: Vec<u32> = (0..column.len() as u32).collect();
    sorted.sort_by(|&a, &b| {
        column[a as usize]
            .partial_cmp(&column[b as usize])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut suffix_start = Vec::with_capacity(cands.len());
    let mut pos = 0usize;
    for &c in cands {
        while pos < sorted.len() && column[sorted[pos] as usize] <= c {
            pos += 1;
        }
        suffix_start.push(pos as u32);
    }
    FeatureIndex { sorted, suffix_start }
}

struct Incumbent {
    rules: Vec<(usize, usize)>,
    m: usize,
    objective: f64,
}

pub(crate) struct SolveOutcome {
    pub rules: Vec<(usize, usize)>,
    pub m: usize,
    pub objective: f64,
    pub lower_bound: f64,
    pub nodes: u64,
    pub wall_time: f64,
}

pub(crate) struct Engine<'a> {
    labels: &'a Labels,
    candidates: &'a CandidateSet,
    weights: ObjectiveWeights,
    max_rules: usize,
    m_lo: usize,
    m_hi: usize,
    time_budget: f64,
    n: usize,
    d: usize,
    feat: Vec<FeatureIndex>,
    started: Instant,
    nodes: u64,
    exhausted: bool,
    open_min: f64,
    incumbent: Option<Incumbent>,
    counts: Vec<u32>,
    chosen: Vec<(usize, usize)>,
    hist: Vec<usize>,
    bounds_pool: Vec<Vec<f64>>,
}

impl<'a> Engine<'a> {
    pub(crate) fn new(
        x: &FeatureMatrix,
        labels: &'a Labels,
        candidates: &'a CandidateSet,
        weights: ObjectiveWeights,
        max_rules: usize,
        m_lo: usize,
        m_hi: usize,
        time_budget: f64,
    ) -> Self {
        let n = x.n_rows();
        let d = x.n_features();
        let feat = (0..d)
            .map(|j| build_feature_index(&x.column(j), candidates.feature(j)))
            .collect();
        Self {
            labels,
            candidates,
            weights,
            max_rules,
            m_lo,
            m_hi,
            time_budget,
            n,
            d,
            feat,
            started: Instant::now(),
            nodes: 0,
            exhausted: false,
            open_min: f64::INFINITY,
            incumbent: None,
            counts: vec![0; n],
            chosen: Vec::with_capacity(d),
            hist: vec![0; d + 2],
            bounds_pool: vec![Vec::new(); d],
        }
    }

    pub(crate) fn run(mut self) -> SolveOutcome {
        // seed the incumbent greedily at every M before any tree search, so
        // exhausting the budget inside an early M's tree can never hide a
        // better checklist that a later M's greedy pass finds in milliseconds
        for m in self.m_lo..=self.m_hi {
            // cheapest conceivable checklist at this M: no errors, N = M
            let floor = objective_from_errors(0, 0, m, m, &self.weights);
            if floor >= self.incumbent_objective() {
                break;
            }
            self.greedy_init(m);
        }
        for m in self.m_lo..=self.m_hi {
            // floors are non-decreasing in M, so nothing at this or any
            // later M can strictly beat the incumbent once this holds
            let floor = objective_from_errors(0, 0, m, m, &self.weights);
            if floor >= self.incumbent_objective() {
                break;
            }
            if self.exhausted {
                self.open_min = self.open_min.min(floor);
                continue;
            }
            if !self.dfs(0, m) {
                self.open_min = self.open_min.min(floor);
            }
        }
        let inc = self.incumbent.expect("at least one feasible checklist exists");
        let lower_bound = inc.objective.min(self.open_min);
        SolveOutcome {
            rules: inc.rules,
            m: inc.m,
            objective: inc.objective,
            lower_bound,
            nodes: self.nodes,
            wall_time: self.started.elapsed().as_secs_f64(),
        }
    }

    fn incumbent_objective(&self) -> f64 {
        self.incumbent.as_ref().map_or(f64::INFINITY, |i| i.objective)
    }

    /// Returns false only when the node was abandoned before processing its
    /// children; the caller then owns the bound bookkeeping for it.
    fn dfs(&mut self, j: usize, m: usize) -> bool {
        self.nodes += 1;
        if self.nodes & 0xFF == 0
            && self.started.elapsed().as_secs_f64() > self.time_budget
        {
            self.exhausted = true;
        }
        if self.exhausted {
            return false;
        }
        if self.chosen.len() == self.max_rules || j == self.d {
            self.try_leaf(m);
            return true;
        }

        let skip_bound = self.skip_child_bound(j, m);
        let mut cand_bounds = std::mem::take(&mut self.bounds_pool[j]);
        self.candidate_child_bounds(j, m, &mut cand_bounds);

        if skip_bound < self.incumbent_objective() {
            self.dfs(j + 1, m);
            if self.exhausted {
                self.open_min = self.open_min.min(skip_bound);
            }
        }
        for k in 0..cand_bounds.len() {
            let b = cand_bounds[k];
            if self.exhausted {
                self.open_min = self.open_min.min(b);
                continue;
            }
            if b < self.incumbent_objective() {
                self.apply(j, k);
                self.dfs(j + 1, m);
                self.undo(j, k);
                if self.exhausted {
                    self.open_min = self.open_min.min(b);
                }
            }
        }
        self.bounds_pool[j] = cand_bounds;
        true
    }

    fn try_leaf(&mut self, m: usize) {
        if self.chosen.len() < m {
            return;
        }
        let mut l_plus = 0usize;
        let mut l_minus = 0usize;
        for i in 0..self.n {
            let predicted = self.counts[i] as usize >= m;
            if self.labels.value(i) {
                if !predicted {
                    l_plus += 1;
                }
            } else if predicted {
                l_minus += 1;
            }
        }
        let objective =
            objective_from_errors(l_plus, l_minus, self.chosen.len(), m, &self.weights);
        if objective < self.incumbent_objective() {
            self.incumbent = Some(Incumbent { rules: self.chosen.clone(), m, objective });
        }
    }

    fn apply(&mut self, j: usize, k: usize) {
        let fidx = &self.feat[j];
        let start = fidx.suffix_start[k] as usize;
        for &p in &fidx.sorted[start..] {
            self.counts[p as usize] += 1;
        }
        self.chosen.push((j, k));
    }

    fn undo(&mut self, j: usize, k: usize) {
        self.chosen.pop();
        let fidx = &self.feat[j];
        let start = fidx.suffix_start[k] as usize;
        for &p in &fidx.sorted[start..] {
            self.counts[p as usize] -= 1;
        }
    }

    /// Bound for the child that leaves feature `j` unused.
    fn skip_child_bound(&mut self, j: usize, m: usize) -> f64 {
        let rem_features = self.d - j - 1;
        let n_chosen = self.chosen.len();
        let rem_eff = rem_features.min(self.max_rules - n_chosen);
        let mut forced = 0usize;
        let mut locked = 0usize;
        self.hist.fill(0);
        for i in 0..self.n {
            let c = self.counts[i] as usize;
            if self.labels.value(i) {
                if c < m {
                    let deficit = m - c;
                    if deficit > rem_eff {
                        forced += 1;
                    } else {
                        self.hist[deficit] += 1;
                    }
                }
            } else if c >= m {
                locked += 1;
            }
        }
        bound_from_stats(forced, locked, &self.hist, n_chosen, m, rem_eff, &self.weights)
    }

    /// Bounds for every candidate child of feature `j` in one pass.
    ///
    /// Walking candidates from the highest down, the set of patients the new
    /// rule covers grows by a contiguous slice of the value-sorted patient
    /// order, so each patient's contribution is reclassified exactly once.
    fn candidate_child_bounds(&mut self, j: usize, m: usize, out: &mut Vec<f64>) {
        let rem_features = self.d - j - 1;
        let n_chosen = self.chosen.len() + 1;
        let rem_eff = rem_features.min(self.max_rules - n_chosen);
        let n_cands = self.candidates.feature(j).len();
        out.clear();
        out.resize(n_cands, f64::INFINITY);

        let mut forced = 0usize;
        let mut locked = 0usize;
        self.hist.fill(0);
        for i in 0..self.n {
            let c = self.counts[i] as usize;
            if self.labels.value(i) {
                if c < m {
                    let deficit = m - c;
                    if deficit > rem_eff {
                        forced += 1;
                    } else {
                        self.hist[deficit] += 1;
                    }
                }
            } else if c >= m {
                locked += 1;
            }
        }

        let fidx = &self.feat[j];
        let mut prev = self.n;
        for k in (0..n_cands).rev() {
            let start = fidx.suffix_start[k] as usize;
            for &p in &fidx.sorted[start..prev] {
                let i = p as usize;
                let c = self.counts[i] as usize;
                if self.labels.value(i) {
                    // covered by the new rule: count rises from c to c + 1
                    if c < m {
                        let deficit = m - c;
                        if deficit > rem_eff {
                            forced -= 1;
                        } else {
                            self.hist[deficit] -= 1;
                        }
                        let deficit = deficit - 1;
                        if deficit > 0 {
                            if deficit > rem_eff {
                                forced += 1;
                            } else {
                                self.hist[deficit] += 1;
                            }
                        }
                    }
                } else if c + 1 == m {
                    locked += 1;
                }
            }
            prev = start;
            out[k] =
                bound_from_stats(forced, locked, &self.hist, n_chosen, m, rem_eff, &self.weights);
        }
    }

    /// Seeds the incumbent with greedy builds: one from scratch and one
    /// extending the rules of the previous incumbent, keeping the better.
    fn greedy_init(&mut self, m: usize) {
        let seeds: Vec<Vec<(usize, usize)>> = match &self.incumbent {
            Some(inc) => vec![Vec::new(), inc.rules.clone()],
            None => vec![Vec::new()],
        };
        for seed in seeds {
            if let Some((rules, objective)) = self.greedy_build(m, seed) {
                if objective < self.incumbent_objective() {
                    self.incumbent = Some(Incumbent { rules, m, objective });
                }
            }
        }
    }

    fn greedy_build(
        &self,
        m: usize,
        seed: Vec<(usize, usize)>,
    ) -> Option<(Vec<(usize, usize)>, f64)> {
        let mut rules = seed;
        rules.truncate(self.max_rules);
        let mut used = vec![false; self.d];
        let mut counts = vec![0u32; self.n];
        for &(j, k) in &rules {
            used[j] = true;
            let fidx = &self.feat[j];
            let start = fidx.suffix_start[k] as usize;
            for &p in &fidx.sorted[start..] {
                counts[p as usize] += 1;
            }
        }

        // grow to m rules, scoring each step as an all-of checklist over the
        // rules so far so that early picks still discriminate
        while rules.len() < m {
            let m_eff = rules.len() + 1;
            let (j, k, _) = self.greedy_best_addition(&counts, &used, m_eff, rules.len() + 1)?;
            self.greedy_apply(&mut rules, &mut used, &mut counts, j, k);
        }

        // keep adding rules while the true objective strictly improves,
        // re-fitting every rule against the rest between additions so the
        // all-of growth phase's early picks do not stay frozen
        loop {
            self.greedy_polish(&mut rules, &mut used, &mut counts, m);
            if rules.len() >= self.max_rules {
                break;
            }
            let current = objective_from_errors(
                count_misses(&counts, self.labels, m),
                count_false_positives(&counts, self.labels, m),
                rules.len(),
                m,
                &self.weights,
            );
            match self.greedy_best_addition(&counts, &used, m, rules.len() + 1) {
                Some((j, k, objective)) if objective < current => {
                    self.greedy_apply(&mut rules, &mut used, &mut counts, j, k);
                }
                _ => break,
            }
        }

        if rules.len() < m {
            return None;
        }
        rules.sort_unstable();
        let objective = objective_from_errors(
            count_misses(&counts, self.labels, m),
            count_false_positives(&counts, self.labels, m),
            rules.len(),
            m,
            &self.weights,
        );
        Some((rules, objective))
    }

    /// Coordinate descent over the chosen rules: lifts each rule out in turn
    /// and re-places it anywhere strictly better (any unused feature, any
    /// candidate), sweeping until a full pass changes nothing. Strict
    /// acceptance guarantees termination.
    fn greedy_polish(
        &self,
        rules: &mut [(usize, usize)],
        used: &mut [bool],
        counts: &mut [u32],
        m: usize,
    ) {
        if rules.len() < m {
            return;
        }
        loop {
            let mut improved = false;
            for r in 0..rules.len() {
                let (j_old, k_old) = rules[r];
                let current = objective_from_errors(
                    count_misses(counts, self.labels, m),
                    count_false_positives(counts, self.labels, m),
                    rules.len(),
                    m,
                    &self.weights,
                );
                let fidx = &self.feat[j_old];
                let start = fidx.suffix_start[k_old] as usize;
                for &p in &fidx.sorted[start..] {
                    counts[p as usize] -= 1;
                }
                used[j_old] = false;
                match self.greedy_best_addition(counts, used, m, rules.len()) {
                    Some((j, k, objective)) if objective < current => {
                        rules[r] = (j, k);
                        used[j] = true;
                        let fidx = &self.feat[j];
                        let start = fidx.suffix_start[k] as usize;
                        for &p in &fidx.sorted[start..] {
                            counts[p as usize] += 1;
                        }
                        improved = true;
                    }
                    _ => {
                        used[j_old] = true;
                        for &p in &fidx.sorted[start..] {
                            counts[p as usize] += 1;
                        }
                    }
                }
            }
            if !improved {
                break;
            }
        }
    }

    fn greedy_apply(
        &self,
        rules: &mut Vec<(usize, usize)>,
        used: &mut [bool],
        counts: &mut [u32],
        j: usize,
        k: usize,
    ) {
        rules.push((j, k));
        used[j] = true;
        let fidx = &self.feat[j];
        let start = fidx.suffix_start[k] as usize;
        for &p in &fidx.sorted[start..] {
            counts[p as usize] += 1;
        }
    }

    /// Best single-rule addition by exact objective at the given M, assuming
    /// the checklist then has `n_rules_after` rules. Ties go to the lowest
    /// feature index, then the lowest candidate index.
    fn greedy_best_addition(
        &self,
        counts: &[u32],
        used: &[bool],
        m: usize,
        n_rules_after: usize,
    ) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for j in 0..self.d {
            if used[j] {
                continue;
            }
            let base_misses = count_misses(counts, self.labels, m);
            let base_fps = count_false_positives(counts, self.labels, m);
            let mut misses = base_misses;
            let mut fps = base_fps;
            let fidx = &self.feat[j];
            let n_cands = self.candidates.feature(j).len();
            let mut prev = self.n;
            let mut feature_best: Option<(usize, f64)> = None;
            for k in (0..n_cands).rev() {
                let start = fidx.suffix_start[k] as usize;
                for &p in &fidx.sorted[start..prev] {
                    let i = p as usize;
                    let c = counts[i] as usize;
                    if c + 1 == m {
                        if self.labels.value(i) {
                            misses -= 1;
                        } else {
                            fps += 1;
                        }
                    }
                }
                prev = start;
                let objective =
                    objective_from_errors(misses, fps, n_rules_after, m, &self.weights);
                // walking downward, <= keeps the lowest tied candidate
                if feature_best.is_none_or(|(_, b)| objective <= b) {
                    feature_best = Some((k, objective));
                }
            }
            if let Some((k, objective)) = feature_best {
                if best.is_none_or(|(_, _, b)| objective < b) {
                    best = Some((j, k, objective));
                }
            }
        }
        best
    }
}

fn count_misses(counts: &[u32], labels: &Labels, m: usize) -> usize {
    counts
        .iter()
        .zip(labels.values())
        .filter(|&(&c, &y)| y && (c as usize) < m)
        .count()
}

fn count_false_positives(counts: &[u32], labels: &Labels, m: usize) -> usize {
    counts
        .iter()
        .zip(labels.values())
        .filter(|&(&c, &y)| !y && (c as usize) >= m)
        .count()
}

/// Lower bound over every completion given the committed error structure.
///
/// A completion adds k more rules (k at least `m - n_chosen`, at most
/// `rem_eff`). Each added rule raises any patient's count by at most one, so
/// a positive whose deficit exceeds k stays missed; the histogram makes that
/// tail count available per k. The reported bound is the minimum over k.
fn bound_from_stats(
    forced: usize,
    locked: usize,
    hist: &[usize],
    n_chosen: usize,
    m: usize,
    rem_eff: usize,
    weights: &ObjectiveWeights,
) -> f64 {
    let need = m.saturating_sub(n_chosen);
    if need > rem_eff {
        return f64::INFINITY;
    }
    let mut tail: usize = hist[need + 1..=rem_eff].iter().sum();
    let mut best = f64::INFINITY;
    for k in need..=rem_eff {
        let b = objective_from_errors(forced + tail, locked, n_chosen + k, m, weights);
        if b < best {
            best = b;
        }
        if tail == 0 {
            // adding rules only raises the remaining terms
            break;
        }
        tail -= hist[k + 1];
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Labels;

    fn matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
        let d = rows[0].len();
        let names = (0..d).map(|j| format!("f{j}")).collect();
        FeatureMatrix::from_rows(rows, names).unwrap()
    }

    #[test]
    fn bound_with_no_remaining_equals_completed_objective() {
        let x = matrix(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]);
        let y = Labels::new(vec![false, false, true, true]).unwrap();
        let cands = CandidateSet::from_matrix(&x).unwrap();
        let w = ObjectiveWeights::new(1.0, 0.01, 0.01).unwrap();
        // rule "f0 > 2.5" satisfied by rows 2 and 3
        let state = SearchState::from_choices(&x, &cands, &[(0, 1)], 1).unwrap();
        let b = bound_partial(&state, &y, 1, &w, 0);
        assert_eq!(b, objective_from_errors(0, 0, 1, 1, &w));

        // rule "f0 > 3.5" misses row 2
        let state = SearchState::from_choices(&x, &cands, &[(0, 2)], 1).unwrap();
        let b = bound_partial(&state, &y, 1, &w, 0);
        assert_eq!(b, objective_from_errors(1, 0, 1, 1, &w));
    }

    #[test]
    fn bound_charges_negatives_already_at_m() {
        let x = matrix(&[vec![5.0, 5.0], vec![0.0, 0.0]]);
        let y = Labels::new(vec![false, true]).unwrap();
        let cands = CandidateSet::from_matrix(&x).unwrap();
        let w = ObjectiveWeights::new(2.0, 0.0, 0.0).unwrap();
        // both rules cover row 0 (the negative), none cover row 1
        let state = SearchState::from_choices(&x, &cands, &[(0, 0), (1, 0)], 2).unwrap();
        // M = 1: row 0 is a false positive in every completion, row 1 can
        // still be rescued by the optimistic remaining rule
        let b = bound_partial(&state, &y, 1, &w, 1);
        assert_eq!(b, 2.0);
    }

    #[test]
    fn bound_counts_unreachable_positives() {
        let x = matrix(&[vec![1.0], vec![2.0]]);
        let y = Labels::new(vec![true, true]).unwrap();
        let cands = CandidateSet::from_matrix(&x).unwrap();
        let w = ObjectiveWeights::new(1.0, 0.0, 0.0).unwrap();
        let state = SearchState::from_choices(&x, &cands, &[], 1).unwrap();
        // M = 3 with one feature left: nobody can reach three rules
        assert_eq!(bound_partial(&state, &y, 3, &w, 1), 2.0);
    }

    #[test]
    fn from_choices_rejects_inconsistent_order() {
        let x = matrix(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let cands = CandidateSet::from_matrix(&x).unwrap();
        assert!(SearchState::from_choices(&x, &cands, &[(1, 0), (0, 0)], 2).is_err());
        assert!(SearchState::from_choices(&x, &cands, &[(0, 0)], 0).is_err());
        assert!(SearchState::from_choices(&x, &cands, &[(0, 9)], 1).is_err());
    }

    #[test]
    fn feature_index_suffixes_match_rule_coverage() {
        let column = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let cands = crate::solver::candidates::candidate_thresholds(&column).unwrap();
        let fidx = build_feature_index(&column, &cands);
        for (k, &c) in cands.iter().enumerate() {
            let covered: std::collections::BTreeSet<u32> = fidx.sorted
                [fidx.suffix_start[k] as usize..]
                .iter()
                .copied()
                .collect();
            let expected: std::collections::BTreeSet<u32> = (0..column.len() as u32)
                .filter(|&i| column[i as usize] > c)
                .collect();
            assert_eq!(covered, expected, "candidate {c}");
        }
    }

    #[test]
    fn stats_bound_never_below_public_bound() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(1..12);
            let d = rng.gen_range(1..5);
            let m = rng.gen_range(1..=d);
            let n_chosen = rng.gen_range(0..=d);
            let rem = d - n_chosen.min(d);
            let counts: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=n_chosen as u32)).collect();
            let y: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            let labels = Labels::new(y).unwrap();
            let w = ObjectiveWeights::new(0.5, 0.02, 0.03).unwrap();

            let mut forced = 0usize;
            let mut locked = 0usize;
            let mut hist = vec![0usize; d + 2];
            let rem_eff = rem;
            for (i, &c) in counts.iter().enumerate() {
                let c = c as usize;
                if labels.value(i) {
                    if c < m {
                        let deficit = m - c;
                        if deficit > rem_eff {
                            forced += 1;
                        } else {
                            hist[deficit] += 1;
                        }
                    }
                } else if c >= m {
                    locked += 1;
                }
            }
            let strong =
                bound_from_stats(forced, locked, &hist, n_chosen, m, rem_eff, &w);
            let state = SearchState {
                next_feature: d - rem,
                chosen: (0..n_chosen).map(|j| (j, 0)).collect(),
                counts,
            };
            let public = bound_partial(&state, &labels, m, &w, rem);
            assert!(
                strong >= public,
                "strengthened {strong} below public {public}"
            );
        }
    }
}
