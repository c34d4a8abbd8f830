//! `moirank`: batch analytics over a social dataset on disk.
//!
//! Four subcommands share one option surface: `validate` checks the dataset
//! and summarizes it, `ir` ranks accounts by structural influence, `moi`
//! ranks them by engagement within each category, and `report` combines the
//! two with a divergence table.
//!
//! Exit codes: 0 success, 1 usage or I/O failure, 2 invalid data, 3 result
//! produced but the rank computation did not converge.

mod config;
mod output;
mod render;

use std::fmt;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use moirank_core::graph::{influence_rank, top_k_by_rank, RankConfig};
use moirank_core::ingest::{load_dataset, Loaded, ValidationReport};
use moirank_core::report::{
    build_report, export_dot, export_report, moi_rankings, ReportConfig, ReportFormat,
};

use crate::config::{OutputFormat, RunConfig, SharedOpts};

/// Failure with its exit code. `Reported` means the diagnostics have already
/// been printed and only the code remains to be surfaced.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Data(String),
    Reported(i32),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Data(_) => 2,
            CliError::Reported(code) => *code,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Io(msg) | CliError::Data(msg) => f.write_str(msg),
            CliError::Reported(code) => write!(f, "exit code {code}"),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "moirank",
    version,
    about = "Rank social accounts by network influence and engagement, and show where the two disagree"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the dataset and print a summary; every problem is listed with
    /// its file and line
    Validate(SharedOpts),
    /// Rank accounts by influence over the relationship graph
    Ir(SharedOpts),
    /// Rank accounts by magnitude of influence within each category
    Moi(SharedOpts),
    /// Combined rankings plus the influence-vs-engagement divergence table
    Report(SharedOpts),
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let (name, opts) = match &cli.command {
        Command::Validate(opts) => ("validate", opts),
        Command::Ir(opts) => ("ir", opts),
        Command::Moi(opts) => ("moi", opts),
        Command::Report(opts) => ("report", opts),
    };
    let cfg = match RunConfig::resolve(opts) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 1;
        }
    };

    let result = match name {
        "validate" => cmd_validate(&cfg),
        "ir" => cmd_ir(&cfg),
        "moi" => cmd_moi(&cfg),
        "report" => cmd_report(&cfg),
        _ => unreachable!(),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Reported(code)) => code,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn print_issues(report: &ValidationReport) {
    for issue in &report.errors {
        eprintln!("error: {issue}");
    }
    for issue in &report.warnings {
        eprintln!("warning: {issue}");
    }
}

/// Loads the dataset or turns its validation report into diagnostics plus an
/// exit code: 1 when a file could not be read at all, 2 for bad content.
fn load(cfg: &RunConfig) -> Result<Loaded, CliError> {
    match load_dataset(&cfg.paths) {
        Ok(loaded) => {
            print_issues(&loaded.report);
            Ok(loaded)
        }
        Err(report) => {
            print_issues(&report);
            Err(CliError::Reported(if report.has_io_errors() {
                1
            } else {
                2
            }))
        }
    }
}

fn rank_config(cfg: &RunConfig) -> RankConfig {
    RankConfig {
        damping: cfg.damping,
        tolerance: cfg.tol,
        max_iterations: cfg.max_iter,
    }
}

/// Always writes its summary document; the exit code carries the verdict.
fn cmd_validate(cfg: &RunConfig) -> Result<i32, CliError> {
    render::require_tabular(cfg.format, "validate")?;
    let (report, code) = match load_dataset(&cfg.paths) {
        Ok(loaded) => (loaded.report, 0),
        Err(report) => {
            let code = if report.has_io_errors() { 1 } else { 2 };
            (report, code)
        }
    };
    print_issues(&report);
    let doc = render::validation_doc(&report, cfg.format);
    output::write(&cfg.output, &doc)?;
    Ok(code)
}

fn cmd_ir(cfg: &RunConfig) -> Result<i32, CliError> {
    render::require_tabular(cfg.format, "ir")?;
    let loaded = load(cfg)?;
    let ranks = influence_rank(&loaded.dataset.graph, &rank_config(cfg))
        .map_err(|e| CliError::Data(e.to_string()))?;
    let top = top_k_by_rank(&ranks, cfg.top);
    let doc = render::ir_doc(&ranks, &top, cfg);
    output::write(&cfg.output, &doc)?;
    if !ranks.converged {
        eprintln!(
            "error: influence rank did not converge within {} iterations (residual {})",
            ranks.iterations, ranks.residual
        );
        return Ok(3);
    }
    Ok(0)
}

fn cmd_moi(cfg: &RunConfig) -> Result<i32, CliError> {
    render::require_tabular(cfg.format, "moi")?;
    let loaded = load(cfg)?;
    let summary = moi_rankings(&loaded.dataset, cfg.mode, cfg.policy)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let doc = render::moi_doc(&summary, cfg);
    output::write(&cfg.output, &doc)?;
    Ok(0)
}

fn cmd_report(cfg: &RunConfig) -> Result<i32, CliError> {
    let loaded = load(cfg)?;

    if cfg.format == OutputFormat::Dot {
        let ranks = influence_rank(&loaded.dataset.graph, &rank_config(cfg))
            .map_err(|e| CliError::Data(e.to_string()))?;
        let doc = export_dot(&loaded.dataset.graph, &ranks);
        output::write(&cfg.output, &doc)?;
        if !ranks.converged {
            eprintln!(
                "error: influence rank did not converge within {} iterations (residual {})",
                ranks.iterations, ranks.residual
            );
            return Ok(3);
        }
        return Ok(0);
    }

    let report_config = ReportConfig {
        damping: cfg.damping,
        tolerance: cfg.tol,
        max_iterations: cfg.max_iter,
        top_k: cfg.top,
        zero_follower_policy: cfg.policy,
        dataset_label: cfg.dataset_label(),
    };
    let report = build_report(&loaded.dataset, cfg.mode, &report_config)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let doc = match cfg.format {
        OutputFormat::Text => render::report_text(&report),
        OutputFormat::Json => export_report(&report, ReportFormat::Json),
        OutputFormat::Csv => export_report(&report, ReportFormat::Csv),
        OutputFormat::Dot => unreachable!("handled above"),
    };
    output::write(&cfg.output, &doc)?;
    if !report.rank_meta.converged {
        eprintln!(
            "error: influence rank did not converge within {} iterations (residual {})",
            report.rank_meta.iterations, report.rank_meta.residual
        );
        return Ok(3);
    }
    Ok(0)
}
