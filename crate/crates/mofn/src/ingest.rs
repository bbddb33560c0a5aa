//! Clinical time-series intake: pipe-separated per-patient files are parsed
//! into hourly grids, summarized to one feature row per patient, sampled
//! into class-balanced folds, and mean-imputed without test leakage.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FeatureMatrix;

/// Column name that carries the hourly outcome label.
pub const LABEL_COLUMN: &str = "SepsisLabel";

/// Demographic variables that are constant over a stay: only their last
/// value enters the summary (mean and sd of a constant add nothing).
pub const STATIC_VARIABLES: &[&str] = &["Age", "Gender"];

/// Administrative columns excluded from features entirely; the time-keeping
/// ones leak outcome timing.
pub const EXCLUDED_VARIABLES: &[&str] = &["Unit1", "Unit2", "HospAdmTime", "ICULOS"];

/// One patient's hourly grid. `hourly_values[t][v]` pairs with
/// `variable_names[v]`; missing measurements are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientRecord {
    pub patient_id: String,
    pub variable_names: Vec<String>,
    pub hourly_values: Vec<Vec<Option<f64>>>,
    pub sepsis_labels: Vec<u8>,
    /// Cells that held something other than a number or the missing marker.
    pub unparseable_cells: usize,
}

/// Parses one pipe-separated patient file: a header line, then one row per
/// hour. "NaN" marks a missing measurement. A cell that parses as neither a
/// number nor the marker becomes missing and is counted, not fatal; the
/// label column, though, must always hold 0 or 1.
pub fn parse_psv(content: &str, patient_id: &str) -> Result<PatientRecord> {
    let mut lines = content.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::format(format!("patient {patient_id}: file is empty")))?;
    let columns: Vec<&str> = header.split('|').map(str::trim).collect();
    let label_col = columns.iter().position(|c| *c == LABEL_COLUMN).ok_or_else(|| {
        Error::format(format!(
            "patient {patient_id}: header has no {LABEL_COLUMN} column"
        ))
    })?;
    let variable_names: Vec<String> = columns
        .iter()
        .enumerate()
        .filter(|(idx, _)| *idx != label_col)
        .map(|(_, c)| c.to_string())
        .collect();

    let mut hourly_values = Vec::new();
    let mut sepsis_labels = Vec::new();
    let mut unparseable_cells = 0;
    for (row_no, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split('|').map(str::trim).collect();
        if cells.len() != columns.len() {
            return Err(Error::format(format!(
                "patient {patient_id}: row {} has {} cells, header has {}",
                row_no + 1,
                cells.len(),
                columns.len()
            )));
        }
        let mut row = Vec::with_capacity(variable_names.len());
        for (idx, cell) in cells.iter().enumerate() {
            if idx == label_col {
                match *cell {
                    "0" => sepsis_labels.push(0),
                    "1" => sepsis_labels.push(1),
                    other => {
                        return Err(Error::format(format!(
                            "patient {patient_id}: row {} has label {other:?}, expected 0 or 1",
                            row_no + 1
                        )))
                    }
                }
            } else if *cell == "NaN" {
                row.push(None);
            } else {
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => row.push(Some(v)),
                    _ => {
                        unparseable_cells += 1;
                        row.push(None);
                    }
                }
            }
        }
        hourly_values.push(row);
    }
    if hourly_values.is_empty() {
        return Err(Error::format(format!("patient {patient_id}: no data rows")));
    }
    Ok(PatientRecord {
        patient_id: patient_id.to_string(),
        variable_names,
        hourly_values,
        sepsis_labels,
        unparseable_cells,
    })
}

/// One patient reduced to summary features. Values align with the owning
/// [`SummaryTable::feature_names`]; unmeasured variables stay `None` until
/// imputation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub patient_id: String,
    pub label: bool,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub feature_names: Vec<String>,
    pub rows: Vec<SummaryRow>,
}

fn is_static(name: &str) -> bool {
    STATIC_VARIABLES.contains(&name)
}

fn is_excluded(name: &str) -> bool {
    EXCLUDED_VARIABLES.contains(&name)
}

/// Feature names induced by a record's variables: three summaries per
/// time-varying variable, the last value alone for static ones.
pub fn summary_feature_names(variable_names: &[String]) -> Vec<String> {
    let mut names = Vec::new();
    for v in variable_names {
        if is_excluded(v) {
            continue;
        }
        if is_static(v) {
            names.push(v.clone());
        } else {
            names.push(format!("{v}_mean"));
            names.push(format!("{v}_sd"));
            names.push(format!("{v}_last"));
        }
    }
    names
}

/// Mean, population sd, and last value over the non-missing entries of one
/// variable; a variable never measured yields all-`None`.
fn summarize_series(series: impl Iterator<Item = Option<f64>>) -> (Option<f64>, Option<f64>, Option<f64>) {
    let observed: Vec<f64> = series.flatten().collect();
    if observed.is_empty() {
        return (None, None, None);
    }
    let n = observed.len() as f64;
    let mean = observed.iter().sum::<f64>() / n;
    let var = observed.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (Some(mean), Some(var.sqrt()), Some(*observed.last().unwrap()))
}

/// Reduces one patient's grid to a summary row. The label is 1 when any
/// hourly label is 1.
pub fn summarize_patient(record: &PatientRecord) -> SummaryRow {
    let mut values = Vec::new();
    for (v, name) in record.variable_names.iter().enumerate() {
        if is_excluded(name) {
            continue;
        }
        let series = record.hourly_values.iter().map(|row| row[v]);
        let (mean, sd, last) = summarize_series(series);
        if is_static(name) {
            values.push(last);
        } else {
            values.push(mean);
            values.push(sd);
            values.push(last);
        }
    }
    SummaryRow {
        patient_id: record.patient_id.clone(),
        label: record.sepsis_labels.contains(&1),
        values,
    }
}

/// Summary rows for a batch of records sharing one variable layout.
pub fn summarize_records(records: &[PatientRecord]) -> Result<SummaryTable> {
    let first = records
        .first()
        .ok_or_else(|| Error::data("no patient records to summarize"))?;
    let feature_names = summary_feature_names(&first.variable_names);
    let mut rows = Vec::with_capacity(records.len());
    for record in records {
        if record.variable_names != first.variable_names {
            return Err(Error::format(format!(
                "patient {}: variable layout differs from patient {}",
                record.patient_id, first.patient_id
            )));
        }
        rows.push(summarize_patient(record));
    }
    Ok(SummaryTable { feature_names, rows })
}

/// Fold sampling policy: every fold gets exactly
/// `round(fold_size * target_pos_fraction)` positive patients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub n_folds: usize,
    pub fold_size: usize,
    pub target_pos_fraction: f64,
    pub seed: u64,
}

impl Default for FoldSpec {
    fn default() -> Self {
        Self { n_folds: 5, fold_size: 2200, target_pos_fraction: 0.37, seed: 0 }
    }
}

impl FoldSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_folds == 0 || self.fold_size == 0 {
            return Err(Error::config("need at least one fold of at least one patient"));
        }
        if !(self.target_pos_fraction > 0.0 && self.target_pos_fraction < 1.0) {
            return Err(Error::config(format!(
                "positive fraction must be inside (0, 1), got {}",
                self.target_pos_fraction
            )));
        }
        Ok(())
    }

    pub fn positives_per_fold(&self) -> usize {
        (self.fold_size as f64 * self.target_pos_fraction).round() as usize
    }
}

/// Samples fold memberships. Positives are drawn without replacement within
/// a fold but shared across folds (the positive pool is usually far smaller
/// than the demand); negatives are drawn without replacement globally, so
/// no negative appears in two folds.
pub fn build_folds(patients: &[(String, bool)], spec: &FoldSpec) -> Result<Vec<Vec<String>>> {
    spec.validate()?;
    let n_pos_fold = spec.positives_per_fold();
    let n_neg_fold = spec.fold_size - n_pos_fold;
    let positives: Vec<&String> =
        patients.iter().filter(|(_, y)| *y).map(|(id, _)| id).collect();
    let negatives: Vec<&String> =
        patients.iter().filter(|(_, y)| !*y).map(|(id, _)| id).collect();
    if positives.len() < n_pos_fold {
        return Err(Error::config(format!(
            "need {n_pos_fold} positive patients per fold, have {}",
            positives.len()
        )));
    }
    let neg_demand = n_neg_fold * spec.n_folds;
    if negatives.len() < neg_demand {
        return Err(Error::config(format!(
            "need {neg_demand} negative patients across {} folds, have {}",
            spec.n_folds,
            negatives.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut neg_order: Vec<&String> = negatives.clone();
    neg_order.shuffle(&mut rng);
    let mut folds = Vec::with_capacity(spec.n_folds);
    for f in 0..spec.n_folds {
        let mut pos_order: Vec<&String> = positives.clone();
        pos_order.shuffle(&mut rng);
        let mut members: Vec<String> =
            pos_order[..n_pos_fold].iter().map(|s| (*s).clone()).collect();
        members.extend(
            neg_order[f * n_neg_fold..(f + 1) * n_neg_fold]
                .iter()
                .map(|s| (*s).clone()),
        );
        folds.push(members);
    }
    Ok(folds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// One line of the fold manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub fold_id: usize,
    pub patient_id: String,
    pub split: Split,
}

/// Folds plus a stratified 80/20 train/test split inside each fold: one
/// fifth of each class (rounded) is held out, seeded and deterministic.
pub fn build_fold_assignments(
    patients: &[(String, bool)],
    spec: &FoldSpec,
) -> Result<Vec<FoldAssignment>> {
    let folds = build_folds(patients, spec)?;
    let label_of: std::collections::HashMap<&str, bool> =
        patients.iter().map(|(id, y)| (id.as_str(), *y)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed_517_1);
    let mut out = Vec::new();
    for (fold_id, members) in folds.iter().enumerate() {
        let mut pos: Vec<&String> =
            members.iter().filter(|id| label_of[id.as_str()]).collect();
        let mut neg: Vec<&String> =
            members.iter().filter(|id| !label_of[id.as_str()]).collect();
        pos.shuffle(&mut rng);
        neg.shuffle(&mut rng);
        let pos_test = (pos.len() as f64 * 0.2).round() as usize;
        let neg_test = (neg.len() as f64 * 0.2).round() as usize;
        for (rank, id) in pos.iter().enumerate() {
            let split = if rank < pos_test { Split::Test } else { Split::Train };
            out.push(FoldAssignment { fold_id, patient_id: (*id).clone(), split });
        }
        for (rank, id) in neg.iter().enumerate() {
            let split = if rank < neg_test { Split::Test } else { Split::Train };
            out.push(FoldAssignment { fold_id, patient_id: (*id).clone(), split });
        }
    }
    Ok(out)
}

/// Imputation constants fitted on a training split: per-kept-column means,
/// plus which original columns were dropped for being entirely missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputeStats {
    /// Indices into the original column order, ascending.
    pub kept: Vec<usize>,
    /// Training means, parallel to `kept`.
    pub means: Vec<f64>,
    pub dropped_names: Vec<String>,
}

/// Replaces missing summaries by the training mean. Without `fitted` this
/// fits on the given rows (dropping columns with no observed value at all);
/// with `fitted` it applies a training fit to held-out rows.
pub fn impute_and_clean(
    names: &[String],
    rows: &[Vec<Option<f64>>],
    fitted: Option<&ImputeStats>,
) -> Result<(FeatureMatrix, ImputeStats)> {
    if rows.is_empty() {
        return Err(Error::data("no rows to impute"));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != names.len() {
            return Err(Error::structural(format!(
                "row {i} has {} values for {} features",
                row.len(),
                names.len()
            )));
        }
    }
    let stats = match fitted {
        Some(s) => {
            if let Some(&bad) = s.kept.iter().find(|&&j| j >= names.len()) {
                return Err(Error::structural(format!(
                    "fitted imputation references column {bad}, table has {}",
                    names.len()
                )));
            }
            s.clone()
        }
        None => {
            let mut kept = Vec::new();
            let mut means = Vec::new();
            let mut dropped_names = Vec::new();
            for j in 0..names.len() {
                let observed: Vec<f64> = rows.iter().filter_map(|r| r[j]).collect();
                if observed.is_empty() {
                    dropped_names.push(names[j].clone());
                } else {
                    kept.push(j);
                    means.push(observed.iter().sum::<f64>() / observed.len() as f64);
                }
            }
            if kept.is_empty() {
                return Err(Error::data(
                    "every feature column is entirely missing; nothing to train on",
                ));
            }
            ImputeStats { kept, means, dropped_names }
        }
    };
    let kept_names: Vec<String> = stats.kept.iter().map(|&j| names[j].clone()).collect();
    let mut values = Vec::with_capacity(rows.len() * stats.kept.len());
    for row in rows {
        for (slot, &j) in stats.kept.iter().enumerate() {
            values.push(row[j].unwrap_or(stats.means[slot]));
        }
    }
    let x = FeatureMatrix::new(values, rows.len(), stats.kept.len(), kept_names)?;
    Ok((x, stats))
}

/// Summary table as CSV: patient id, the feature columns, then the label
/// column `y`. Missing values are empty cells.
pub fn render_summary_csv(table: &SummaryTable) -> String {
    let mut out = String::from("patient_id");
    for name in &table.feature_names {
        out.push(',');
        out.push_str(name);
    }
    out.push_str(",y\n");
    for row in &table.rows {
        out.push_str(&row.patient_id);
        for v in &row.values {
            out.push(',');
            if let Some(v) = v {
                out.push_str(&format!("{v}"));
            }
        }
        out.push_str(if row.label { ",1\n" } else { ",0\n" });
    }
    out
}

pub fn parse_summary_csv(content: &str) -> Result<SummaryTable> {
    let mut lines = content.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::format("summary table is empty"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 2 || cols[0] != "patient_id" || *cols.last().unwrap() != "y" {
        return Err(Error::format(
            "summary header must be patient_id,<features...>,y",
        ));
    }
    let feature_names: Vec<String> =
        cols[1..cols.len() - 1].iter().map(|c| c.to_string()).collect();
    let mut rows = Vec::new();
    for (line_no, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != cols.len() {
            return Err(Error::format(format!(
                "summary row {} has {} cells, header has {}",
                line_no + 1,
                cells.len(),
                cols.len()
            )));
        }
        let label = match *cells.last().unwrap() {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::format(format!(
                    "summary row {} has label {other:?}, expected 0 or 1",
                    line_no + 1
                )))
            }
        };
        let mut values = Vec::with_capacity(feature_names.len());
        for cell in &cells[1..cells.len() - 1] {
            if cell.is_empty() {
                values.push(None);
            } else {
                let v: f64 = cell.parse().map_err(|_| {
                    Error::format(format!(
                        "summary row {} has unreadable value {cell:?}",
                        line_no + 1
                    ))
                })?;
                values.push(Some(v));
            }
        }
        rows.push(SummaryRow { patient_id: cells[0].to_string(), label, values });
    }
    Ok(SummaryTable { feature_names, rows })
}

/// Fold manifest CSV: `fold_id,patient_id,split`.
pub fn render_fold_manifest(assignments: &[FoldAssignment]) -> String {
    let mut out = String::from("fold_id,patient_id,split\n");
    for a in assignments {
        out.push_str(&format!("{},{},{}\n", a.fold_id, a.patient_id, a.split.as_str()));
    }
    out
}

pub fn parse_fold_manifest(content: &str) -> Result<Vec<FoldAssignment>> {
    let mut lines = content.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some("fold_id,patient_id,split") => {}
        _ => return Err(Error::format("fold manifest must start with fold_id,patient_id,split")),
    }
    let mut out = Vec::new();
    for (line_no, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 3 {
            return Err(Error::format(format!(
                "fold manifest row {} needs 3 cells",
                line_no + 1
            )));
        }
        let fold_id: usize = cells[0].parse().map_err(|_| {
            Error::format(format!("fold manifest row {}: bad fold id {:?}", line_no + 1, cells[0]))
        })?;
        let split = match cells[2] {
            "train" => Split::Train,
            "test" => Split::Test,
            other => {
                return Err(Error::format(format!(
                    "fold manifest row {}: split must be train or test, got {other:?}",
                    line_no + 1
                )))
            }
        };
        out.push(FoldAssignment { fold_id, patient_id: cells[1].to_string(), split });
    }
    Ok(out)
}
