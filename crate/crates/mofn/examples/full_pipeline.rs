//! The whole flow in one run: synthesize patient files, ingest them into a
//! summary table and folds, train the exact checklist plus two baselines
//! on every fold, and reduce everything into the report and threshold
//! chart. Equivalent to the `mofn` binary's ingest/train/report
//! subcommands.

use mofn::pipeline::{
    cmd_ingest, cmd_report, cmd_train, render_report_text, Method, RunConfig,
};
use mofn::synth::write_synthetic_psv_dir;

fn main() -> mofn::Result<()> {
    let root = std::env::temp_dir().join("mofn_full_pipeline");
    let _ = std::fs::remove_dir_all(&root);

    let mut config = RunConfig::default();
    config.data_dir = root.join("data");
    config.output_dir = root.join("out");
    config.seed = 11;
    config.threads = 2;
    config.k_features = 6;
    config.folds.n_folds = 2;
    config.folds.fold_size = 40;
    config.folds.target_pos_fraction = 0.5;
    config.solver.time_budget_secs = 30.0;

    let synth = write_synthetic_psv_dir(&config.data_dir, 120, config.seed)?;
    println!("synthesized {} patients ({} positive)", synth.files_written, synth.positives);

    let ingest = cmd_ingest(&config)?;
    println!("ingested {} patients into {}", ingest.patients, config.output_dir.display());

    for method in [Method::Mip, Method::Lr, Method::Dummy] {
        let report = cmd_train(&config, method)?;
        println!(
            "trained {:<6} mean test accuracy {:.4}",
            report.method,
            report.per_fold_test.iter().map(|m| m.accuracy).sum::<f64>()
                / report.per_fold_test.len() as f64
        );
        if !report.uncertified_folds.is_empty() {
            println!("  (budget exhausted on folds {:?})", report.uncertified_folds);
        }
    }

    let report = cmd_report(&config)?;
    println!("\n{}", render_report_text(&report));
    println!("artifacts under {}", config.output_dir.display());
    Ok(())
}
