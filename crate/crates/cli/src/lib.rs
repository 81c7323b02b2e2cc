//! Batch front end for `doe-core`.
//!
//! Exit codes: 0 success, 1 a well-formed negative outcome (no admissible
//! design, undetermined aggregate), 2 invalid input or I/O failure.

pub mod args;
pub mod diagnostics;
pub mod document;
pub mod inspect;
pub mod plan;

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use args::Cli;
use args::Command;
use document::PlanDocument;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] doe_core::Error),
    #[error("{0}")]
    Usage(String),
    /// Already rendered diagnostics.
    #[error("{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn csv(path: &Path, source: csv::Error) -> Self {
        CliError::Csv {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Reads and validates a plan document.
pub fn load(path: &Path) -> Result<PlanDocument, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    PlanDocument::parse(&text).map_err(|diags| {
        let shown = path.display().to_string();
        CliError::Invalid(diags.iter().map(|d| d.render(&shown)).collect())
    })
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), CliError> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Validate { path } => {
            let doc = load(path)?;
            eprintln!(
                "{}: ok ({} design factors, {} constraints)",
                path.display(),
                doc.factor_space.column_names().len(),
                doc.factor_space.constraints().len()
            );
            Ok(0)
        }
        Command::Plan(args) => {
            let doc = load(&args.path)?;
            let outcome = plan::plan(&doc, args)?;
            for s in &outcome.report.skipped {
                eprintln!("skipped {}: {}", s.design_class, s.reason);
            }
            for c in &outcome.report.selection.candidates {
                eprintln!(
                    "candidate {} {} ({} runs): {:?}",
                    c.index, c.design_class, c.n_runs, c.verdict
                );
            }
            match outcome.report.selected {
                Some(i) => eprintln!("selected candidate {i}; wrote {}", args.out.display()),
                None => eprintln!("no admissible design; wrote {}", args.out.display()),
            }
            Ok(if outcome.report.selection.any_admissible() { 0 } else { 1 })
        }
        Command::Classify(args) => {
            let doc = load(&args.path)?;
            print_json(&inspect::classify(&doc, args)?)?;
            Ok(0)
        }
        Command::Aggregate(args) => {
            let doc = load(&args.path)?;
            let report = inspect::aggregate(&doc, args)?;
            print_json(&report)?;
            Ok(if report.any_undetermined() { 1 } else { 0 })
        }
    }
}

/// Runs a parsed command line, printing errors to stderr, and returns the
/// process exit code.
pub fn run(cli: &Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", render_error(&e));
            2
        }
    }
}

fn render_error(e: &CliError) -> String {
    match e {
        CliError::Invalid(lines) => lines.join("\n"),
        other => format!("error: {other}"),
    }
}
