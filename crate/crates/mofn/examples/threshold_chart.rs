//! Build the threshold-comparison chart: where the exact checklist and the
//! soft-threshold baseline place each feature's cut point, normalized by
//! the training data's range, written as CSV and a standalone SVG.

use mofn::baselines::sets_train;
use mofn::features::TrainHyper;
use mofn::plot::{render_threshold_csv, render_threshold_svg, threshold_rows, ThresholdChart};
use mofn::solver::{solve_checklist, CandidateSet, SolverConfig};
use mofn::synth::planted_instance;

fn main() -> mofn::Result<()> {
    let inst = planted_instance(200, 5, 3, 2, 0.02, 13)?;

    let config = SolverConfig::for_matrix(&inst.x, 1.0)?;
    let candidates = CandidateSet::from_matrix(&inst.x)?;
    let solved = solve_checklist(&inst.x, &inst.y, &candidates, &config)?;

    let hyper = TrainHyper::default();
    let soft = sets_train(&inst.x, &inst.y, 0.1, &hyper)?;

    let names = inst.x.feature_names();
    let mut chart = ThresholdChart::default();
    for rule in solved.best.rules() {
        chart.mip.insert(names[rule.feature_index].clone(), rule.threshold);
    }
    for (j, &phi) in soft.phi.iter().enumerate() {
        chart.sets.insert(names[j].clone(), phi);
    }

    let rows = threshold_rows(&inst.x, &chart)?;
    let dir = std::env::temp_dir();
    let csv_path = dir.join("thresholds.csv");
    let svg_path = dir.join("thresholds.svg");
    std::fs::write(&csv_path, render_threshold_csv(&rows))?;
    std::fs::write(&svg_path, render_threshold_svg(&rows))?;

    println!("wrote {}", csv_path.display());
    println!("wrote {}", svg_path.display());
    for row in &rows {
        println!(
            "{:>4}: exact {:>8} soft {:>8} mean {:.3}{}",
            row.feature_name,
            row.mip_t_norm.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into()),
            row.sets_t_norm.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into()),
            row.mean_norm,
            if row.clipped { "  (clipped)" } else { "" },
        );
    }
    Ok(())
}
