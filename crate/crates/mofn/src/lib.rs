//! Learn M-of-N predictive checklists from continuous tabular data.
//!
//! A predictive checklist labels a row positive exactly when at least M of
//! its N threshold rules ("feature > t") are satisfied. This crate learns
//! the rules, the thresholds, and M jointly by exact combinatorial
//! branch-and-bound over data-induced threshold candidates, and ships the
//! surrounding experimental pipeline: clinical time-series ingestion,
//! logistic-regression feature selection, a family of baseline models, and
//! reporting with threshold-comparison charts.
//!
//! Start with [`solver::solve_checklist`] for the core optimization, or
//! [`pipeline`] for the end-to-end flow behind the `mofn` binary.

pub mod baselines;
pub mod error;
pub mod features;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod plot;
pub mod solver;
pub mod synth;

pub use baselines::{
    binarize_at, dummy_fit, mean_threshold_solve, sets_to_checklist, sets_train, unit_weighting,
    MlpModel, SetsModel, UnitWeightingConfig,
};
pub use error::{Error, Result};
pub use features::{select_top_k, train_logistic, LRModel, TrainHyper};
pub use metrics::{
    aggregate_folds, classification_metrics, precision_at_recall, recall_at_precision,
    FoldAggregate, MeanStd, MetricSet, SweepValue,
};
pub use model::{
    apply_concepts, objective_value, Checklist, ConceptRule, EvalCounts, FeatureMatrix, Labels,
    ObjectiveWeights, RuleDirection,
};
pub use pipeline::{
    cmd_export_mip, cmd_ingest, cmd_report, cmd_train, fork_seed, Method, RunConfig,
};
