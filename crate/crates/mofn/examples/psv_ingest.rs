//! Generate a directory of pipe-separated patient time-series files, then
//! walk the ingest path by hand: parse, summarize to per-stay features,
//! and build seeded fold assignments.
//!
//! Usage: psv_ingest [dir] [n_patients] [seed]

use std::path::PathBuf;

use mofn::ingest::{parse_psv, summarize_records, FoldSpec};
use mofn::synth::write_synthetic_psv_dir;

fn main() -> mofn::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().map(PathBuf::from).unwrap_or_else(|| {
        std::env::temp_dir().join("mofn_synth_psv")
    });
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(60);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);

    let report = write_synthetic_psv_dir(&dir, n, seed)?;
    println!(
        "wrote {} files under {} ({} positive by the planted 2-of-3 rule)",
        report.files_written,
        dir.display(),
        report.positives
    );

    let mut records = Vec::new();
    let mut paths: Vec<_> = std::fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "psv"))
        .collect();
    paths.sort();
    for path in &paths {
        let id = path.file_stem().unwrap().to_string_lossy().to_string();
        let content = std::fs::read_to_string(path)?;
        records.push(parse_psv(&content, &id)?);
    }
    println!("parsed {} records; first has {} hours", records.len(), records[0].hourly_values.len());

    let table = summarize_records(&records)?;
    println!(
        "summary table: {} rows x {} features ({} positive stays)",
        table.rows.len(),
        table.feature_names.len(),
        table.rows.iter().filter(|r| r.label).count()
    );
    println!("features: {}", table.feature_names.join(", "));

    let spec = FoldSpec {
        n_folds: 2,
        fold_size: 20,
        target_pos_fraction: 0.5,
        seed,
    };
    let patients: Vec<(String, bool)> =
        table.rows.iter().map(|r| (r.patient_id.clone(), r.label)).collect();
    let assignments = mofn::ingest::build_fold_assignments(&patients, &spec)?;
    for fold in 0..spec.n_folds {
        let members: Vec<_> = assignments.iter().filter(|a| a.fold_id == fold).collect();
        let test = members.iter().filter(|a| a.split == mofn::ingest::Split::Test).count();
        println!("fold {fold}: {} patients, {} held out", members.len(), test);
    }
    Ok(())
}
