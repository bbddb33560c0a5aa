//! Synthetic data with known ground truth: feature matrices labeled by a
//! planted checklist (optionally with label noise), and a writer that lays
//! the same structure out as a directory of per-patient time-series files.

use std::fs;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Checklist, ConceptRule, FeatureMatrix, Labels};

/// A generated instance whose optimal structure is known by construction.
#[derive(Debug, Clone)]
pub struct PlantedInstance {
    pub x: FeatureMatrix,
    pub y: Labels,
    /// The checklist that produced the labels (before any noise).
    pub planted: Checklist,
    /// Row indices whose labels were flipped, ascending.
    pub flipped: Vec<usize>,
}

/// Uniform features in [0, 10) rounded to two decimals, labeled by an
/// `m_required`-of-`n_rules` checklist over the first `n_rules` features.
/// Thresholds end in .005 so no value ever ties a threshold. A noise
/// fraction flips that share of labels (rounded), sampled without
/// replacement.
pub fn planted_instance(
    n: usize,
    d: usize,
    n_rules: usize,
    m_required: usize,
    noise_fraction: f64,
    seed: u64,
) -> Result<PlantedInstance> {
    if n_rules > d {
        return Err(Error::config(format!("{n_rules} rules over {d} features")));
    }
    if !(0.0..1.0).contains(&noise_fraction) {
        return Err(Error::config(format!(
            "noise fraction must be in [0, 1), got {noise_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rules: Vec<ConceptRule> = (0..n_rules)
        .map(|j| {
            // grid 2.005, 2.105, ..., 7.905: strictly between 2-decimal values
            let t = 2.005 + 0.1 * rng.gen_range(0..60) as f64;
            ConceptRule::above(j, t)
        })
        .collect();
    let planted = Checklist::new(rules, m_required)?;
    let mut values = Vec::with_capacity(n * d);
    for _ in 0..n * d {
        let v = (rng.gen_range(0.0..10.0f64) * 100.0).round() / 100.0;
        values.push(v);
    }
    let names = (0..d).map(|j| format!("f{j}")).collect();
    let x = FeatureMatrix::new(values, n, d, names)?;
    let mut bits = planted.predict(&x)?;

    let n_flips = (noise_fraction * n as f64).round() as usize;
    let mut flipped: Vec<usize> = (0..n).collect();
    flipped.shuffle(&mut rng);
    flipped.truncate(n_flips);
    flipped.sort_unstable();
    for &i in &flipped {
        bits[i] = !bits[i];
    }
    Ok(PlantedInstance { x, y: Labels::new(bits)?, planted, flipped })
}

/// Time-varying vitals written to the synthetic patient files; the planted
/// rules live on their `_last` summaries.
pub const SYNTH_VITALS: &[&str] = &["HR", "O2Sat", "Temp", "MAP", "Resp"];

/// What [`write_synthetic_psv_dir`] put on disk.
#[derive(Debug, Clone)]
pub struct SynthDirReport {
    /// Ground truth over the summary features (`<vital>_last` names).
    pub planted: Checklist,
    pub files_written: usize,
    pub positives: usize,
}

/// Writes `n_patients` pipe-separated patient files under `dir`, labeled by
/// a 2-of-3 checklist on the last values of the first three vitals. Files
/// include static and excluded columns plus scattered missing cells, so a
/// full ingest run exercises every summary path.
pub fn write_synthetic_psv_dir(dir: &Path, n_patients: usize, seed: u64) -> Result<SynthDirReport> {
    if n_patients == 0 {
        return Err(Error::config("need at least one synthetic patient"));
    }
    fs::create_dir_all(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let thresholds = [60.5, 94.5, 37.25];
    let header = format!(
        "{}|Age|Gender|ICULOS|SepsisLabel",
        SYNTH_VITALS.join("|")
    );

    let mut positives = 0;
    for p in 0..n_patients {
        let hours = rng.gen_range(4..10usize);
        // per-vital baseline; the final hour's value decides the rules
        let finals: Vec<f64> = vec![
            (rng.gen_range(40.0..90.0f64) * 100.0).round() / 100.0,
            (rng.gen_range(88.0..100.0f64) * 100.0).round() / 100.0,
            (rng.gen_range(35.5..39.5f64) * 100.0).round() / 100.0,
            (rng.gen_range(60.0..110.0f64) * 100.0).round() / 100.0,
            (rng.gen_range(10.0..28.0f64) * 100.0).round() / 100.0,
        ];
        let satisfied = (0..3).filter(|&v| finals[v] > thresholds[v]).count();
        let label = satisfied >= 2;
        if label {
            positives += 1;
        }
        let age = rng.gen_range(20..90);
        let gender = rng.gen_range(0..2);

        let mut content = header.clone();
        content.push('\n');
        for h in 0..hours {
            let mut cells: Vec<String> = Vec::new();
            for f in &finals {
                if h + 1 == hours {
                    cells.push(format!("{f}"));
                } else if rng.gen_bool(0.15) {
                    cells.push("NaN".to_string());
                } else {
                    let jitter = (rng.gen_range(-2.0..2.0f64) * 100.0).round() / 100.0;
                    cells.push(format!("{}", ((f + jitter) * 100.0).round() / 100.0));
                }
            }
            cells.push(format!("{age}"));
            cells.push(format!("{gender}"));
            cells.push(format!("{}", h + 1));
            // the hourly label turns on late in positive stays
            cells.push(if label && h + 2 >= hours { "1" } else { "0" }.to_string());
            content.push_str(&cells.join("|"));
            content.push('\n');
        }
        fs::write(dir.join(format!("patient{p:04}.psv")), content)?;
    }

    let rules: Vec<ConceptRule> = thresholds
        .iter()
        .enumerate()
        .map(|(v, &t)| ConceptRule::above(v, t))
        .collect();
    Ok(SynthDirReport {
        planted: Checklist::new(rules, 2)?,
        files_written: n_patients,
        positives,
    })
}
