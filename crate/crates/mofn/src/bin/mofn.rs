//! Command-line front end: ingest patient files, train checklist and
//! baseline models fold by fold, reduce the artifacts into reports, export
//! the integer program, or print the default configuration.
//!
//! Exit codes: 0 success, 1 usage or configuration problem, 2 data problem,
//! 3 time budget exhausted before an optimality certificate (the incumbent
//! is still written).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mofn::pipeline::{
    cmd_export_mip, cmd_ingest, cmd_report, cmd_train, render_report_text, Method, RunConfig,
};
use mofn::{Error, Result};

#[derive(Parser)]
#[command(name = "mofn", version, about = "Learn M-of-N predictive checklists exactly")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Config file plus per-field overrides; flags win over the file.
#[derive(Args)]
struct ConfigArgs {
    /// Run configuration file. Without this flag, `mofn.toml` is used when
    /// present and built-in defaults otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory of raw `.psv` patient files.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Directory for every artifact this run writes.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Root random seed; every fold and method forks from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for per-fold training.
    #[arg(long)]
    threads: Option<usize>,
    /// How many screened features each fold keeps.
    #[arg(long)]
    k_features: Option<usize>,
    /// Replace the configured lambda grid with this single trade-off.
    #[arg(long)]
    lambda: Option<f64>,
    /// Solver wall-clock budget per fold, in seconds.
    #[arg(long)]
    time_budget_secs: Option<f64>,
    /// Cap on checklist size N for the exact solver.
    #[arg(long)]
    max_rules: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => {
                let fallback = Path::new("mofn.toml");
                if fallback.exists() {
                    RunConfig::load(fallback)?
                } else {
                    RunConfig::default()
                }
            }
        };
        if let Some(v) = &self.data_dir {
            config.data_dir = v.clone();
        }
        if let Some(v) = &self.output_dir {
            config.output_dir = v.clone();
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.threads {
            config.threads = v;
        }
        if let Some(v) = self.k_features {
            config.k_features = v;
        }
        if let Some(v) = self.lambda {
            config.solver.lambda_grid = vec![v];
        }
        if let Some(v) = self.time_budget_secs {
            config.solver.time_budget_secs = v;
        }
        if let Some(v) = self.max_rules {
            config.solver.max_rules = Some(v);
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Summarize raw patient files and build the fold manifest.
    Ingest {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Train one method on every fold and write per-fold model artifacts.
    Train {
        /// One of: mip, ilp-mean, unit, sets, lr, mlp, dummy.
        method: String,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Aggregate trained artifacts into report tables and the threshold
    /// chart.
    Report {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Write one fold's training problem as LP-format text.
    ExportMip {
        /// Fold whose training split to export.
        #[arg(long, default_value_t = 0)]
        fold: usize,
        /// Destination path; defaults to mip_fold{F}.lp in the output
        /// directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Print the full default configuration.
    Defaults,
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Structural(_) | Error::OracleRefused(_) => 1,
        Error::Format(_)
        | Error::Data(_)
        | Error::Training(_)
        | Error::Degenerate(_)
        | Error::UndefinedMetric(_)
        | Error::Io(_) => 2,
    }
}

/// Prints to stdout, swallowing a closed pipe so `mofn report | head`
/// finishes its file writes quietly instead of panicking mid-write.
fn emit(text: std::fmt::Arguments) {
    use std::io::Write;
    let _ = std::io::stdout().write_fmt(text);
}

macro_rules! emitln {
    ($($arg:tt)*) => { emit(format_args!("{}\n", format_args!($($arg)*))) };
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Defaults => {
            emit(format_args!("{}", RunConfig::default().to_toml()));
            Ok(0)
        }
        Command::Ingest { cfg } => {
            let config = cfg.resolve()?;
            let report = cmd_ingest(&config)?;
            for note in &report.skipped {
                eprintln!("skipped {note}");
            }
            emitln!(
                "summarized {} patients ({} positive) into {}",
                report.patients,
                report.positives,
                config.output_dir.display()
            );
            Ok(0)
        }
        Command::Train { method, cfg } => {
            let method = Method::parse(&method)?;
            let config = cfg.resolve()?;
            let report = cmd_train(&config, method)?;
            for (fold, m) in report.per_fold_test.iter().enumerate() {
                emitln!(
                    "fold {fold}: test accuracy {:.4}  precision {:.4}  recall {:.4}",
                    m.accuracy, m.precision, m.recall
                );
            }
            emitln!(
                "trained {} on {} folds; artifacts under {}",
                report.method,
                report.per_fold_test.len(),
                config.output_dir.join("models").display()
            );
            if report.uncertified_folds.is_empty() {
                Ok(0)
            } else {
                eprintln!(
                    "warning: time budget exhausted before certification on folds {:?}; \
                     incumbents written",
                    report.uncertified_folds
                );
                Ok(3)
            }
        }
        Command::Report { cfg } => {
            let config = cfg.resolve()?;
            let report = cmd_report(&config)?;
            emit(format_args!("{}", render_report_text(&report)));
            emitln!("\nwrote report.txt and report.json under {}", config.output_dir.display());
            Ok(0)
        }
        Command::ExportMip { fold, out, cfg } => {
            let config = cfg.resolve()?;
            let path = cmd_export_mip(&config, fold, out.as_deref())?;
            emitln!("wrote {}", path.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version go to stdout and are not failures
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
