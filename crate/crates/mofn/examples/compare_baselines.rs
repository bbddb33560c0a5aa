//! Train every method on one synthetic train/test split and print their
//! held-out metrics side by side: the exact checklist against fixed-
//! threshold, rounding, and unconstrained-score baselines.

use mofn::ingest::ImputeStats;
use mofn::pipeline::{run_method, FoldData, RunConfig, ALL_METHODS};
use mofn::synth::planted_instance;

fn main() -> mofn::Result<()> {
    let train = planted_instance(200, 6, 3, 2, 0.05, 3)?;
    let test = planted_instance(80, 6, 3, 2, 0.05, 4)?;
    let fold = FoldData {
        fold_id: 0,
        selected_names: train.x.feature_names().to_vec(),
        impute: ImputeStats {
            kept: (0..train.x.n_features()).collect(),
            means: vec![0.0; train.x.n_features()],
            dropped_names: vec![],
        },
        x_train: train.x,
        y_train: train.y,
        x_test: test.x,
        y_test: test.y,
    };

    let mut config = RunConfig::default();
    config.solver.time_budget_secs = 30.0;

    println!(
        "{:<10} {:>10} {:>10} {:>10} {:>12} {:>6} {:>4}",
        "method", "accuracy", "precision", "recall", "specificity", "N", "M"
    );
    for &method in ALL_METHODS {
        let artifact = run_method(method, &fold, &config)?;
        let m = artifact.test_metrics;
        let size = |v: Option<usize>| v.map(|s| s.to_string()).unwrap_or_else(|| "-".into());
        println!(
            "{:<10} {:>10.4} {:>10.4} {:>10.4} {:>12.4} {:>6} {:>4}",
            method.as_str(),
            m.accuracy,
            m.precision,
            m.recall,
            m.specificity,
            size(m.n_rules),
            size(m.m_required),
        );
    }
    Ok(())
}
