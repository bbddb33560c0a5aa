//! End-to-end orchestration behind the command-line interface: ingest a
//! directory of patient files, build folds, train any of the models on
//! every fold in a worker pool, and reduce the per-fold artifacts into
//! comparison tables and the threshold chart.
//!
//! Every product is reproducible from (config, seed): randomness is forked
//! from one root seed by stable string labels, workers hand their results
//! back for an index-ordered reduction, and files are written atomically
//! via a temporary sibling.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{
    column_means, dummy_fit, mean_threshold_solve, mlp_default_hyper, mlp_train,
    sets_to_checklist, sets_train, unit_weighting, UnitWeightingConfig,
};
use crate::error::{Error, Result};
use crate::features::{select_top_k, standardize, train_logistic_raw, TrainHyper};
use crate::ingest::{
    build_fold_assignments, impute_and_clean, parse_fold_manifest, parse_psv, parse_summary_csv,
    render_fold_manifest, render_summary_csv, summarize_records, FoldAssignment, FoldSpec,
    ImputeStats, Split, SummaryTable,
};
use crate::metrics::{
    aggregate_folds, classification_metrics, mean_std, precision_at_recall, recall_at_precision,
    FoldAggregate, MeanStd, MetricSet, SweepValue,
};
use crate::model::{Checklist, FeatureMatrix, Labels, ObjectiveWeights};
use crate::plot::{render_threshold_csv, render_threshold_svg, threshold_rows, ThresholdChart};
use crate::solver::{export_mip_form, solve_checklist, CandidateSet, SolverConfig};

/// Fold construction settings, mirrored from the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FoldsSection {
    pub n_folds: usize,
    pub fold_size: usize,
    pub target_pos_fraction: f64,
}

impl Default for FoldsSection {
    fn default() -> Self {
        let spec = FoldSpec::default();
        Self {
            n_folds: spec.n_folds,
            fold_size: spec.fold_size,
            target_pos_fraction: spec.target_pos_fraction,
        }
    }
}

/// Exact-solver settings. The first grid entry is the operative trade-off
/// for training; later entries document the sweep a user may run by
/// re-running with each value first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub lambda_grid: Vec<f64>,
    pub eps_n: Option<f64>,
    pub eps_m: Option<f64>,
    pub max_rules: Option<usize>,
    pub time_budget_secs: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            lambda_grid: vec![1.0],
            eps_n: None,
            eps_m: None,
            max_rules: None,
            time_budget_secs: 60.0,
        }
    }
}

/// Baseline hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselinesSection {
    /// Unit-weighting coefficient filter half-width.
    pub beta: f64,
    /// Soft-threshold temperature.
    pub tau: f64,
    pub mlp_hidden: usize,
    pub mlp_batch: usize,
}

impl Default for BaselinesSection {
    fn default() -> Self {
        Self { beta: 0.1, tau: 0.1, mlp_hidden: 32, mlp_batch: 32 }
    }
}

/// Gradient-descent settings shared by the full-batch trainers; each model
/// derives its own seed from the run seed, so there is none here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    pub learning_rate: f64,
    pub l2_strength: f64,
    pub max_epochs: usize,
    pub tolerance: f64,
}

impl Default for TrainingSection {
    fn default() -> Self {
        let h = TrainHyper::default();
        Self {
            learning_rate: h.learning_rate,
            l2_strength: h.l2_strength,
            max_epochs: h.max_epochs,
            tolerance: h.tolerance,
        }
    }
}

/// The whole run configuration; parsed from a small sectioned text file and
/// printable with its defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub threads: usize,
    /// How many features the per-fold regression screen keeps.
    pub k_features: usize,
    pub folds: FoldsSection,
    pub solver: SolverSection,
    pub baselines: BaselinesSection,
    pub training: TrainingSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("data"),
            output_dir: PathBuf::from("out"),
            seed: 0,
            threads: 1,
            k_features: 10,
            folds: FoldsSection::default(),
            solver: SolverSection::default(),
            baselines: BaselinesSection::default(),
            training: TrainingSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(content: &str) -> Result<Self> {
        let config: RunConfig =
            toml::from_str(content).map_err(|e| Error::config(format!("bad config file: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&content)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.threads == 0 {
            return Err(Error::config("threads must be at least 1"));
        }
        if self.k_features == 0 {
            return Err(Error::config("k_features must be at least 1"));
        }
        if self.solver.lambda_grid.is_empty() {
            return Err(Error::config("lambda_grid must not be empty"));
        }
        for &l in &self.solver.lambda_grid {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::config(format!(
                    "lambda values must be finite and > 0, got {l}"
                )));
            }
        }
        if !(self.solver.time_budget_secs > 0.0) {
            return Err(Error::config("time_budget_secs must be positive"));
        }
        if self.solver.max_rules == Some(0) {
            return Err(Error::config("max_rules must be at least 1"));
        }
        if !(self.baselines.tau > 0.0 && self.baselines.tau.is_finite()) {
            return Err(Error::config("tau must be finite and > 0"));
        }
        if !(self.baselines.beta >= 0.0 && self.baselines.beta.is_finite()) {
            return Err(Error::config("beta must be finite and >= 0"));
        }
        if self.baselines.mlp_hidden == 0 || self.baselines.mlp_batch == 0 {
            return Err(Error::config("mlp_hidden and mlp_batch must be at least 1"));
        }
        self.fold_spec().validate()?;
        self.base_hyper(0).validate()?;
        Ok(())
    }

    pub fn fold_spec(&self) -> FoldSpec {
        FoldSpec {
            n_folds: self.folds.n_folds,
            fold_size: self.folds.fold_size,
            target_pos_fraction: self.folds.target_pos_fraction,
            seed: self.seed,
        }
    }

    /// The operative error trade-off for training and reporting.
    pub fn lambda(&self) -> f64 {
        self.solver.lambda_grid[0]
    }

    fn base_hyper(&self, seed: u64) -> TrainHyper {
        TrainHyper {
            learning_rate: self.training.learning_rate,
            l2_strength: self.training.l2_strength,
            max_epochs: self.training.max_epochs,
            tolerance: self.training.tolerance,
            seed,
        }
    }

    pub fn summary_path(&self) -> PathBuf {
        self.output_dir.join("summary.csv")
    }

    pub fn folds_path(&self) -> PathBuf {
        self.output_dir.join("folds.csv")
    }

    pub fn model_path(&self, method: Method, fold: usize, ext: &str) -> PathBuf {
        self.output_dir.join("models").join(format!("{}_fold{fold}.{ext}", method.as_str()))
    }
}

/// Derives an independent 64-bit seed from the run seed and a stable label,
/// so adding one model or fold never shifts another's random stream.
pub fn fork_seed(seed: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is long enough"))
}

/// A full forked RNG for callers that need more than a seed.
pub fn fork_rng(seed: u64, label: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Writes through a temporary sibling then renames, so a crash never leaves
/// a half-written artifact at the final path.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let mut name = path
        .file_name()
        .ok_or_else(|| Error::structural(format!("cannot write to {}", path.display())))?
        .to_os_string();
    name.push(".tmp");
    let tmp = path.with_file_name(name);
    fs::write(&tmp, content)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// What one ingest run produced.
#[derive(Debug, Clone, Serialize)]
pub struct IngestReport {
    pub patients: usize,
    pub positives: usize,
    /// Files that could not be read or parsed, with reasons.
    pub skipped: Vec<String>,
}

/// Reads every `.psv` file under `data_dir`, writes the summary table and
/// the fold manifest. Files that fail to read or parse are skipped with a
/// note, unless they exceed a tenth of the directory, which fails the run.
pub fn cmd_ingest(config: &RunConfig) -> Result<IngestReport> {
    config.validate()?;
    let mut paths: Vec<PathBuf> = fs::read_dir(&config.data_dir)
        .map_err(|e| {
            Error::config(format!("cannot read data_dir {}: {e}", config.data_dir.display()))
        })?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "psv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::config(format!(
            "data_dir {} contains no .psv files",
            config.data_dir.display()
        )));
    }
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for path in &paths {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| path.display().to_string());
        let outcome = fs::read_to_string(path)
            .map_err(Error::from)
            .and_then(|content| parse_psv(&content, &id));
        match outcome {
            Ok(record) => records.push(record),
            Err(e) => skipped.push(format!("{}: {e}", path.display())),
        }
    }
    if skipped.len() * 10 > paths.len() {
        return Err(Error::data(format!(
            "{} of {} patient files are unreadable:\n  {}",
            skipped.len(),
            paths.len(),
            skipped.join("\n  ")
        )));
    }
    let table = summarize_records(&records)?;
    let patients_by_label: Vec<(String, bool)> =
        table.rows.iter().map(|r| (r.patient_id.clone(), r.label)).collect();
    let assignments = build_fold_assignments(&patients_by_label, &config.fold_spec())?;
    fs::create_dir_all(&config.output_dir)?;
    write_atomic(&config.summary_path(), &render_summary_csv(&table))?;
    write_atomic(&config.folds_path(), &render_fold_manifest(&assignments))?;
    Ok(IngestReport {
        patients: table.rows.len(),
        positives: table.rows.iter().filter(|r| r.label).count(),
        skipped,
    })
}

/// The trainable methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    /// The exact solver with learnable thresholds.
    Mip,
    /// The exact solver restricted to column-mean thresholds.
    IlpMean,
    /// Regression-filtered unit weighting at column-mean thresholds.
    Unit,
    /// Soft thresholds learned by gradient descent, then rounded.
    Sets,
    Lr,
    Mlp,
    Dummy,
}

/// Canonical report order: exact models, checklist baselines, then the
/// unconstrained score models.
pub const ALL_METHODS: &[Method] = &[
    Method::Mip,
    Method::IlpMean,
    Method::Unit,
    Method::Sets,
    Method::Lr,
    Method::Mlp,
    Method::Dummy,
];

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Mip => "mip",
            Method::IlpMean => "ilp-mean",
            Method::Unit => "unit",
            Method::Sets => "sets",
            Method::Lr => "lr",
            Method::Mlp => "mlp",
            Method::Dummy => "dummy",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        ALL_METHODS.iter().copied().find(|m| m.as_str() == s).ok_or_else(|| {
            let known: Vec<&str> = ALL_METHODS.iter().map(|m| m.as_str()).collect();
            Error::config(format!("unknown method {s:?}; expected one of {}", known.join(", ")))
        })
    }
}

/// One fold's ready-to-train data: imputed, screened down to the top
/// regression features, in raw clinical units.
pub struct FoldData {
    pub fold_id: usize,
    pub x_train: FeatureMatrix,
    pub y_train: Labels,
    pub x_test: FeatureMatrix,
    pub y_test: Labels,
    pub impute: ImputeStats,
    /// Names of the selected columns, in matrix order.
    pub selected_names: Vec<String>,
}

fn split_rows(table: &SummaryTable, ids: &[&str]) -> Result<(Vec<Vec<Option<f64>>>, Labels)> {
    let index: BTreeMap<&str, usize> =
        table.rows.iter().enumerate().map(|(i, r)| (r.patient_id.as_str(), i)).collect();
    let mut rows = Vec::with_capacity(ids.len());
    let mut bits = Vec::with_capacity(ids.len());
    for id in ids {
        let &i = index.get(id).ok_or_else(|| {
            Error::data(format!("fold manifest names patient {id} missing from the summary table"))
        })?;
        rows.push(table.rows[i].values.clone());
        bits.push(table.rows[i].label);
    }
    Ok((rows, Labels::new(bits)?))
}

/// Builds one fold's matrices: impute on the training split, apply the fit
/// to the held-out split, then keep the `k_features` columns with the
/// largest regression coefficient magnitudes (fitted on training only).
pub fn prepare_fold(
    table: &SummaryTable,
    assignments: &[FoldAssignment],
    fold_id: usize,
    config: &RunConfig,
) -> Result<FoldData> {
    let ids_for = |split: Split| -> Vec<&str> {
        assignments
            .iter()
            .filter(|a| a.fold_id == fold_id && a.split == split)
            .map(|a| a.patient_id.as_str())
            .collect()
    };
    let train_ids = ids_for(Split::Train);
    let test_ids = ids_for(Split::Test);
    if train_ids.is_empty() || test_ids.is_empty() {
        return Err(Error::data(format!(
            "fold {fold_id} is missing a train or test split; re-run ingest"
        )));
    }
    let (train_rows, y_train) = split_rows(table, &train_ids)?;
    let (test_rows, y_test) = split_rows(table, &test_ids)?;
    let (x_train_full, impute) = impute_and_clean(&table.feature_names, &train_rows, None)?;
    let (x_test_full, _) = impute_and_clean(&table.feature_names, &test_rows, Some(&impute))?;

    let hyper = config.base_hyper(fork_seed(config.seed, &format!("fold{fold_id}/screen")));
    let (screen_model, kept) = train_logistic_raw(&x_train_full, &y_train, &hyper)?;
    let k = config.k_features.min(screen_model.weights.len());
    let top = select_top_k(&screen_model, k)?;
    // map regression slots back to matrix columns, then restore column order
    let mut chosen: Vec<usize> = top.iter().map(|&slot| kept[slot]).collect();
    chosen.sort_unstable();
    let x_train = x_train_full.select_columns(&chosen)?;
    let x_test = x_test_full.select_columns(&chosen)?;
    let selected_names = x_train.feature_names().to_vec();
    Ok(FoldData { fold_id, x_train, y_train, x_test, y_test, impute, selected_names })
}

/// One trained model on one fold, in the shape shared by every method.
/// Solver-specific fields stay absent for models that certify nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodArtifact {
    pub method: String,
    pub fold_id: usize,
    pub feature_names: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub checklist: Option<Checklist>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lower_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certified_optimal: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub nodes_explored: Option<u64>,
    pub train_metrics: MetricSet,
    pub test_metrics: MetricSet,
    /// Held-out scores, for models that rank rather than decide.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub test_scores: Option<Vec<f64>>,
    /// Learned cut points by feature name, for the threshold chart.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub thresholds_by_name: Option<Vec<(String, f64)>>,
}

fn solver_config_for(config: &RunConfig, x: &FeatureMatrix) -> Result<SolverConfig> {
    let mut sc = SolverConfig::for_matrix(x, config.lambda())?;
    if config.solver.eps_n.is_some() || config.solver.eps_m.is_some() {
        sc.weights = ObjectiveWeights::new(
            config.lambda(),
            config.solver.eps_n.unwrap_or(sc.weights.eps_n),
            config.solver.eps_m.unwrap_or(sc.weights.eps_m),
        )?;
    }
    if let Some(max_rules) = config.solver.max_rules {
        sc.max_rules = max_rules.min(x.n_features());
        sc.m_range = (1, sc.max_rules);
    }
    sc.time_budget = config.solver.time_budget_secs;
    sc.seed = config.seed;
    Ok(sc)
}

fn checklist_metrics(cl: &Checklist, fold: &FoldData) -> Result<(MetricSet, MetricSet)> {
    let train = classification_metrics(&fold.y_train, &cl.predict(&fold.x_train)?)?
        .with_size(cl.n_rules(), cl.m_required());
    let test = classification_metrics(&fold.y_test, &cl.predict(&fold.x_test)?)?
        .with_size(cl.n_rules(), cl.m_required());
    Ok((train, test))
}

fn thresholds_of(cl: &Checklist, names: &[String]) -> Vec<(String, f64)> {
    cl.rules().iter().map(|r| (names[r.feature_index].clone(), r.threshold)).collect()
}

struct FitOutcome {
    checklist: Option<Checklist>,
    objective: Option<f64>,
    lower_bound: Option<f64>,
    certified_optimal: Option<bool>,
    nodes_explored: Option<u64>,
    train_metrics: MetricSet,
    test_metrics: MetricSet,
    test_scores: Option<Vec<f64>>,
    thresholds_by_name: Option<Vec<(String, f64)>>,
}

impl FitOutcome {
    fn from_checklist(cl: Checklist, fold: &FoldData, names: &[String]) -> Result<Self> {
        let (train_metrics, test_metrics) = checklist_metrics(&cl, fold)?;
        Ok(Self {
            thresholds_by_name: Some(thresholds_of(&cl, names)),
            checklist: Some(cl),
            objective: None,
            lower_bound: None,
            certified_optimal: None,
            nodes_explored: None,
            train_metrics,
            test_metrics,
            test_scores: None,
        })
    }

    fn from_solve(
        result: crate::solver::SolveResult,
        fold: &FoldData,
        names: &[String],
    ) -> Result<Self> {
        let mut out = Self::from_checklist(result.best, fold, names)?;
        out.objective = Some(result.objective);
        out.lower_bound = Some(result.lower_bound);
        out.certified_optimal = Some(result.certified_optimal);
        out.nodes_explored = Some(result.nodes_explored);
        Ok(out)
    }

    fn from_scores(
        train_metrics: MetricSet,
        test_metrics: MetricSet,
        test_scores: Option<Vec<f64>>,
    ) -> Self {
        Self {
            checklist: None,
            objective: None,
            lower_bound: None,
            certified_optimal: None,
            nodes_explored: None,
            train_metrics,
            test_metrics,
            test_scores,
            thresholds_by_name: None,
        }
    }
}

/// Trains `method` on one prepared fold.
pub fn run_method(method: Method, fold: &FoldData, config: &RunConfig) -> Result<MethodArtifact> {
    let names = fold.selected_names.clone();
    let seed = fork_seed(config.seed, &format!("fold{}/{}", fold.fold_id, method.as_str()));
    let hyper = config.base_hyper(seed);
    let objective = ObjectiveWeights::with_default_eps(config.lambda(), fold.x_train.n_features())?;
    let uw = UnitWeightingConfig { beta: config.baselines.beta };
    let outcome = match method {
        Method::Mip => {
            let sc = solver_config_for(config, &fold.x_train)?;
            let candidates = CandidateSet::from_matrix(&fold.x_train)?;
            let result = solve_checklist(&fold.x_train, &fold.y_train, &candidates, &sc)?;
            FitOutcome::from_solve(result, fold, &names)?
        }
        Method::IlpMean => {
            let sc = solver_config_for(config, &fold.x_train)?;
            let result = mean_threshold_solve(&fold.x_train, &fold.y_train, &sc)?;
            FitOutcome::from_solve(result, fold, &names)?
        }
        Method::Unit => {
            let thresholds = column_means(&fold.x_train);
            let cl =
                unit_weighting(&fold.x_train, &fold.y_train, &thresholds, &hyper, &uw, &objective)?;
            FitOutcome::from_checklist(cl, fold, &names)?
        }
        Method::Sets => {
            let model = sets_train(&fold.x_train, &fold.y_train, config.baselines.tau, &hyper)?;
            let cl =
                sets_to_checklist(&model, &fold.x_train, &fold.y_train, &hyper, &uw, &objective)?;
            let mut outcome = FitOutcome::from_checklist(cl, fold, &names)?;
            // the chart wants the learned soft cut points themselves, not
            // just the ones surviving the rounding filter
            outcome.thresholds_by_name =
                Some(names.iter().cloned().zip(model.phi.iter().copied()).collect());
            outcome
        }
        Method::Lr => {
            let (model, kept) = train_logistic_raw(&fold.x_train, &fold.y_train, &hyper)?;
            let x_train_kept = fold.x_train.select_columns(&kept)?;
            let x_test_kept = fold.x_test.select_columns(&kept)?;
            FitOutcome::from_scores(
                classification_metrics(&fold.y_train, &model.predict(&x_train_kept)?)?,
                classification_metrics(&fold.y_test, &model.predict(&x_test_kept)?)?,
                Some(model.score(&x_test_kept)?),
            )
        }
        Method::Mlp => {
            let std_train = standardize(&fold.x_train)?;
            let mlp_hyper = TrainHyper { seed, ..mlp_default_hyper() };
            let model = mlp_train(
                &std_train.z,
                &fold.y_train,
                config.baselines.mlp_hidden,
                config.baselines.mlp_batch,
                &mlp_hyper,
            )?;
            let x_test_kept = fold.x_test.select_columns(&std_train.kept)?;
            let mut z_values = Vec::with_capacity(x_test_kept.n_rows() * x_test_kept.n_features());
            for i in 0..x_test_kept.n_rows() {
                for (j, (&mean, &sd)) in std_train.means.iter().zip(&std_train.sds).enumerate() {
                    z_values.push((x_test_kept.value(i, j) - mean) / sd);
                }
            }
            let z_test = FeatureMatrix::new(
                z_values,
                x_test_kept.n_rows(),
                x_test_kept.n_features(),
                x_test_kept.feature_names().to_vec(),
            )?;
            FitOutcome::from_scores(
                classification_metrics(&fold.y_train, &model.predict(&std_train.z)?)?,
                classification_metrics(&fold.y_test, &model.predict(&z_test)?)?,
                Some(model.predict_proba(&z_test)?),
            )
        }
        Method::Dummy => {
            let model = dummy_fit(&fold.y_train);
            FitOutcome::from_scores(
                classification_metrics(&fold.y_train, &model.predict(fold.y_train.len()))?,
                classification_metrics(&fold.y_test, &model.predict(fold.y_test.len()))?,
                None,
            )
        }
    };
    Ok(MethodArtifact {
        method: method.as_str().to_string(),
        fold_id: fold.fold_id,
        feature_names: names,
        checklist: outcome.checklist,
        objective: outcome.objective,
        lower_bound: outcome.lower_bound,
        certified_optimal: outcome.certified_optimal,
        nodes_explored: outcome.nodes_explored,
        train_metrics: outcome.train_metrics,
        test_metrics: outcome.test_metrics,
        test_scores: outcome.test_scores,
        thresholds_by_name: outcome.thresholds_by_name,
    })
}

fn render_artifact_text(artifact: &MethodArtifact) -> Result<String> {
    let mut out = format!("method           {}\n", artifact.method);
    out.push_str(&format!("fold             {}\n", artifact.fold_id));
    if let Some(obj) = artifact.objective {
        out.push_str(&format!("objective        {obj}\n"));
    }
    if let Some(cert) = artifact.certified_optimal {
        out.push_str(&format!(
            "certificate      {}\n",
            if cert { "optimal" } else { "incumbent" }
        ));
    }
    let line = |label: &str, m: &MetricSet| {
        format!(
            "{label}  accuracy {:.4}  precision {:.4}  recall {:.4}  specificity {:.4}\n",
            m.accuracy, m.precision, m.recall, m.specificity
        )
    };
    out.push_str(&line("train metrics  ", &artifact.train_metrics));
    out.push_str(&line("test metrics   ", &artifact.test_metrics));
    if let Some(cl) = &artifact.checklist {
        out.push('\n');
        out.push_str(&cl.render_text(&artifact.feature_names)?);
    }
    Ok(out)
}

/// Loads the ingest artifacts, failing with the missing path by name.
fn load_ingest_artifacts(config: &RunConfig) -> Result<(SummaryTable, Vec<FoldAssignment>)> {
    let read = |path: &Path| -> Result<String> {
        fs::read_to_string(path).map_err(|_| {
            Error::config(format!(
                "missing ingest artifact {}; run the ingest step first",
                path.display()
            ))
        })
    };
    let table = parse_summary_csv(&read(&config.summary_path())?)?;
    let assignments = parse_fold_manifest(&read(&config.folds_path())?)?;
    Ok((table, assignments))
}

/// What one training run produced across folds.
#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub method: String,
    pub per_fold_test: Vec<MetricSet>,
    /// Folds whose exact solve ran out of budget before certifying.
    pub uncertified_folds: Vec<usize>,
}

/// Trains one method on every fold, spreading folds over `config.threads`
/// workers, and writes one structured and one readable artifact per fold.
/// Results are reduced in fold order, so the thread count never changes a
/// single output byte.
pub fn cmd_train(config: &RunConfig, method: Method) -> Result<TrainReport> {
    config.validate()?;
    let (table, assignments) = load_ingest_artifacts(config)?;
    let n_folds = config.folds.n_folds;
    let artifacts = run_folds_pooled(config.threads, n_folds, |fold_id| {
        let fold = prepare_fold(&table, &assignments, fold_id, config)?;
        run_method(method, &fold, config)
    })?;
    fs::create_dir_all(config.output_dir.join("models"))?;
    let mut per_fold_test = Vec::new();
    let mut uncertified = Vec::new();
    for artifact in &artifacts {
        let json = serde_json::to_string_pretty(artifact)
            .map_err(|e| Error::structural(format!("cannot serialize model artifact: {e}")))?;
        write_atomic(&config.model_path(method, artifact.fold_id, "json"), &json)?;
        write_atomic(
            &config.model_path(method, artifact.fold_id, "txt"),
            &render_artifact_text(artifact)?,
        )?;
        per_fold_test.push(artifact.test_metrics);
        if artifact.certified_optimal == Some(false) {
            uncertified.push(artifact.fold_id);
        }
    }
    Ok(TrainReport {
        method: method.as_str().to_string(),
        per_fold_test,
        uncertified_folds: uncertified,
    })
}

/// Runs `work(fold_id)` for every fold on up to `threads` workers and
/// returns results in fold order. Folds are striped over workers statically
/// (worker w takes folds w, w + threads, ...), so the assignment, and with
/// it every random stream, is independent of scheduling.
fn run_folds_pooled<T, F>(threads: usize, n_folds: usize, work: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let threads = threads.clamp(1, n_folds.max(1));
    let mut slots: Vec<Option<Result<T>>> = (0..n_folds).map(|_| None).collect();
    if threads <= 1 {
        for (fold_id, slot) in slots.iter_mut().enumerate() {
            *slot = Some(work(fold_id));
        }
    } else {
        let work = &work;
        let outcomes: Vec<Vec<(usize, Result<T>)>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|w| {
                    scope.spawn(move || {
                        (w..n_folds)
                            .step_by(threads)
                            .map(|fold_id| (fold_id, work(fold_id)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker does not panic")).collect()
        });
        for batch in outcomes {
            for (fold_id, outcome) in batch {
                slots[fold_id] = Some(outcome);
            }
        }
    }
    let mut out = Vec::with_capacity(n_folds);
    for (fold_id, slot) in slots.into_iter().enumerate() {
        match slot {
            Some(Ok(value)) => out.push(value),
            Some(Err(e)) => return Err(e),
            None => return Err(Error::structural(format!("fold {fold_id} produced no result"))),
        }
    }
    Ok(out)
}

/// The checklist's held-out operating point next to the regression scorer
/// evaluated at that same recall and precision, fold by fold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatingComparison {
    pub mip_precision: MeanStd,
    pub mip_recall: MeanStd,
    pub lr_precision_at_mip_recall: MeanStd,
    pub lr_recall_at_mip_precision: MeanStd,
    /// Folds where no regression operating point reached a target.
    pub unqualified_folds: Vec<usize>,
}

/// The result-determining slice of a run configuration. Worker count and
/// artifact locations steer execution, never any output byte, so recording
/// them would make otherwise identical runs compare unequal.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigDigest {
    pub data_dir: PathBuf,
    pub seed: u64,
    pub k_features: usize,
    pub folds: FoldsSection,
    pub solver: SolverSection,
    pub baselines: BaselinesSection,
    pub training: TrainingSection,
}

impl ConfigDigest {
    /// Operative error trade-off, the first grid entry.
    pub fn lambda(&self) -> f64 {
        self.solver.lambda_grid[0]
    }

    fn of(config: &RunConfig) -> Self {
        Self {
            data_dir: config.data_dir.clone(),
            seed: config.seed,
            k_features: config.k_features,
            folds: config.folds.clone(),
            solver: config.solver.clone(),
            baselines: config.baselines.clone(),
            training: config.training.clone(),
        }
    }
}

/// Everything the report step computed, mirrored into `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: ConfigDigest,
    pub methods: BTreeMap<String, MethodReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operating_comparison: Option<OperatingComparison>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodReport {
    pub per_fold: Vec<MethodArtifact>,
    pub aggregate_test: FoldAggregate,
}

fn load_method_artifacts(
    config: &RunConfig,
    method: Method,
) -> Result<Option<Vec<MethodArtifact>>> {
    if !config.model_path(method, 0, "json").exists() {
        return Ok(None);
    }
    let mut artifacts = Vec::new();
    for fold in 0..config.folds.n_folds {
        let path = config.model_path(method, fold, "json");
        let content = fs::read_to_string(&path).map_err(|_| {
            Error::data(format!(
                "method {} is missing fold artifact {}; re-run training",
                method.as_str(),
                path.display()
            ))
        })?;
        let artifact: MethodArtifact = serde_json::from_str(&content).map_err(|e| {
            Error::format(format!("unreadable model artifact {}: {e}", path.display()))
        })?;
        if artifact.fold_id != fold || artifact.method != method.as_str() {
            return Err(Error::format(format!(
                "model artifact {} belongs to {} fold {}",
                path.display(),
                artifact.method,
                artifact.fold_id
            )));
        }
        artifacts.push(artifact);
    }
    Ok(Some(artifacts))
}

/// A checklist can sit at recall or precision exactly 0 or 1, which the
/// sweep API rejects as a target; nudging into the open interval keeps the
/// comparison defined without changing which points qualify.
fn clamp_target(t: f64) -> f64 {
    t.clamp(1e-9, 1.0 - 1e-9)
}

fn operating_comparison(
    config: &RunConfig,
    table: &SummaryTable,
    assignments: &[FoldAssignment],
    mip: &[MethodArtifact],
    lr: &[MethodArtifact],
) -> Result<OperatingComparison> {
    let mut mip_p = Vec::new();
    let mut mip_r = Vec::new();
    let mut p_at_r = Vec::new();
    let mut r_at_p = Vec::new();
    let mut unqualified = Vec::new();
    for fold_id in 0..config.folds.n_folds {
        let fold = prepare_fold(table, assignments, fold_id, config)?;
        let scores = lr[fold_id].test_scores.as_ref().ok_or_else(|| {
            Error::data(format!("lr artifact for fold {fold_id} carries no scores; retrain"))
        })?;
        if scores.len() != fold.y_test.len() {
            return Err(Error::data(format!(
                "lr artifact for fold {fold_id} has {} scores for {} held-out patients; retrain",
                scores.len(),
                fold.y_test.len()
            )));
        }
        let m = &mip[fold_id].test_metrics;
        mip_p.push(m.precision);
        mip_r.push(m.recall);
        let p: SweepValue = precision_at_recall(scores, &fold.y_test, clamp_target(m.recall))?;
        let r: SweepValue = recall_at_precision(scores, &fold.y_test, clamp_target(m.precision))?;
        if !p.qualified || !r.qualified {
            unqualified.push(fold_id);
        }
        p_at_r.push(p.value);
        r_at_p.push(r.value);
    }
    Ok(OperatingComparison {
        mip_precision: mean_std(&mip_p),
        mip_recall: mean_std(&mip_r),
        lr_precision_at_mip_recall: mean_std(&p_at_r),
        lr_recall_at_mip_precision: mean_std(&r_at_p),
        unqualified_folds: unqualified,
    })
}

fn fmt_pm(m: &MeanStd, scale: f64, decimals: usize) -> String {
    format!("{:.dec$} ± {:.dec$}", m.mean * scale, m.std * scale, dec = decimals)
}

fn render_metrics_table(methods: &BTreeMap<String, MethodReport>) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<10} {:>16} {:>16} {:>16} {:>16} {:>12} {:>12}\n",
        "method", "accuracy %", "precision", "recall", "specificity", "N", "M"
    ));
    for method in ALL_METHODS {
        let Some(report) = methods.get(method.as_str()) else { continue };
        let a = &report.aggregate_test;
        let n = a.n_rules.map(|m| fmt_pm(&m, 1.0, 1)).unwrap_or_else(|| "-".to_string());
        let m_col = a.m_required.map(|m| fmt_pm(&m, 1.0, 1)).unwrap_or_else(|| "-".to_string());
        out.push_str(&format!(
            "{:<10} {:>16} {:>16} {:>16} {:>16} {:>12} {:>12}\n",
            method.as_str(),
            fmt_pm(&a.accuracy, 100.0, 2),
            fmt_pm(&a.precision, 1.0, 3),
            fmt_pm(&a.recall, 1.0, 3),
            fmt_pm(&a.specificity, 1.0, 3),
            n,
            m_col,
        ));
    }
    out
}

/// The whole human-readable report, as written to `report.txt`.
pub fn render_report_text(report: &RunReport) -> String {
    let mut out = String::new();
    out.push_str("checklist learning report\n");
    out.push_str("=========================\n\n");
    out.push_str(&format!(
        "seed {}   lambda {}   folds {}   features kept {}\n\n",
        report.config.seed,
        report.config.lambda(),
        report.config.folds.n_folds,
        report.config.k_features
    ));
    out.push_str("held-out metrics, mean ± std over folds\n");
    out.push_str(&render_metrics_table(&report.methods));
    if let Some(op) = &report.operating_comparison {
        out.push_str("\noperating-point comparison (held out)\n");
        out.push_str(&format!(
            "checklist precision {}   recall {}\n",
            fmt_pm(&op.mip_precision, 1.0, 3),
            fmt_pm(&op.mip_recall, 1.0, 3)
        ));
        out.push_str(&format!(
            "regression precision at checklist recall {}\n",
            fmt_pm(&op.lr_precision_at_mip_recall, 1.0, 3)
        ));
        out.push_str(&format!(
            "regression recall at checklist precision {}\n",
            fmt_pm(&op.lr_recall_at_mip_precision, 1.0, 3)
        ));
        if !op.unqualified_folds.is_empty() {
            out.push_str(&format!(
                "note: no qualifying regression operating point in folds {:?}\n",
                op.unqualified_folds
            ));
        }
    }
    for method in ALL_METHODS {
        let Some(mr) = report.methods.get(method.as_str()) else { continue };
        let Some(first) = mr.per_fold.first() else { continue };
        let Some(cl) = &first.checklist else { continue };
        let tag = match first.certified_optimal {
            Some(true) => " (certified optimal)",
            Some(false) => " (incumbent)",
            None => "",
        };
        out.push_str(&format!("\n{} checklist, fold 0{tag}:\n", method.as_str()));
        if let Ok(text) = cl.render_text(&first.feature_names) {
            out.push_str(&text);
        }
    }
    out
}

/// Reduces every trained method's artifacts into `report.txt` and
/// `report.json`, plus the threshold chart when the exact checklist was
/// trained.
pub fn cmd_report(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let (table, assignments) = load_ingest_artifacts(config)?;
    let mut methods = BTreeMap::new();
    for method in ALL_METHODS {
        if let Some(artifacts) = load_method_artifacts(config, *method)? {
            let per_fold_metrics: Vec<MetricSet> =
                artifacts.iter().map(|a| a.test_metrics).collect();
            methods.insert(
                method.as_str().to_string(),
                MethodReport {
                    aggregate_test: aggregate_folds(&per_fold_metrics)?,
                    per_fold: artifacts,
                },
            );
        }
    }
    if methods.is_empty() {
        return Err(Error::config(
            "no trained methods found under the output directory; run training first",
        ));
    }
    let operating = match (methods.get("mip"), methods.get("lr")) {
        (Some(mip), Some(lr)) => {
            Some(operating_comparison(config, &table, &assignments, &mip.per_fold, &lr.per_fold)?)
        }
        _ => None,
    };
    let report =
        RunReport { config: ConfigDigest::of(config), methods, operating_comparison: operating };

    if let Some(mip) = report.methods.get("mip") {
        let fold0 = prepare_fold(&table, &assignments, 0, config)?;
        let mut chart = ThresholdChart::default();
        if let Some(pairs) = &mip.per_fold[0].thresholds_by_name {
            chart.mip = pairs.iter().cloned().collect();
        }
        if let Some(sets) = report.methods.get("sets") {
            if let Some(pairs) = &sets.per_fold[0].thresholds_by_name {
                chart.sets = pairs.iter().cloned().collect();
            }
        }
        let rows = threshold_rows(&fold0.x_train, &chart)?;
        write_atomic(&config.output_dir.join("thresholds.csv"), &render_threshold_csv(&rows))?;
        write_atomic(&config.output_dir.join("thresholds.svg"), &render_threshold_svg(&rows))?;
    }

    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::structural(format!("cannot serialize report: {e}")))?;
    write_atomic(&config.output_dir.join("report.json"), &json)?;
    write_atomic(&config.output_dir.join("report.txt"), &render_report_text(&report))?;
    Ok(report)
}

/// Writes the integer program for one fold's training split in LP text
/// form; returns the path written.
pub fn cmd_export_mip(config: &RunConfig, fold_id: usize, out: Option<&Path>) -> Result<PathBuf> {
    config.validate()?;
    let (table, assignments) = load_ingest_artifacts(config)?;
    let fold = prepare_fold(&table, &assignments, fold_id, config)?;
    let sc = solver_config_for(config, &fold.x_train)?;
    let candidates = CandidateSet::from_matrix(&fold.x_train)?;
    let text = export_mip_form(&fold.x_train, &fold.y_train, Some(&candidates), &sc)?;
    let path = match out {
        Some(p) => p.to_path_buf(),
        None => config.output_dir.join(format!("mip_fold{fold_id}.lp")),
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    write_atomic(&path, &text)?;
    Ok(path)
}
