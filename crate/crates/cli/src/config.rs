//! Option resolution: command-line flags override the optional TOML config
//! file, which overrides built-in defaults. Range checks run once, after
//! merging, so a bad value is rejected identically whichever source it
//! came from.

use std::fmt;
use std::path::PathBuf;

use clap::Args;
use serde::Deserialize;

use moirank_core::engagement::{EngagementMode, ZeroFollowerPolicy};
use moirank_core::ingest::DatasetPaths;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
    Csv,
    Dot,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Text => "text",
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
            OutputFormat::Dot => "dot",
        })
    }
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(OutputFormat::Text),
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "dot" => Ok(OutputFormat::Dot),
            other => Err(format!(
                "unknown format `{other}` (expected text, json, csv, or dot)"
            )),
        }
    }
}

fn parse_mode(s: &str) -> Result<EngagementMode, String> {
    s.parse()
}

fn parse_policy(s: &str) -> Result<ZeroFollowerPolicy, String> {
    s.parse()
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse()
}

/// Options shared by every subcommand. All of them may come from the config
/// file instead; the dataset paths must come from one of the two.
#[derive(Debug, Clone, Default, Args)]
pub struct SharedOpts {
    /// Account roster CSV (required here or in --config)
    #[arg(long, value_name = "FILE")]
    pub accounts: Option<PathBuf>,

    /// Undirected edge list CSV (required here or in --config)
    #[arg(long, value_name = "FILE")]
    pub edges: Option<PathBuf>,

    /// Post archive JSONL (required here or in --config)
    #[arg(long, value_name = "FILE")]
    pub posts: Option<PathBuf>,

    /// TOML file supplying defaults for any option [keys: accounts, edges,
    /// posts, mode, damping, tol, max_iter, top, zero_follower_policy,
    /// format, output]
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Engagement counting: strict (distinct users) or raw (interaction
    /// count x 100) [default: strict]
    #[arg(long, value_name = "MODE", value_parser = parse_mode)]
    pub mode: Option<EngagementMode>,

    /// Damping factor for influence rank, within [0, 1] [default: 0.85]
    #[arg(long, value_name = "D")]
    pub damping: Option<f64>,

    /// Convergence tolerance (L1 change) for influence rank [default: 1e-9]
    #[arg(long, value_name = "EPS")]
    pub tol: Option<f64>,

    /// Iteration cap for influence rank [default: 1000]
    #[arg(long, value_name = "N")]
    pub max_iter: Option<usize>,

    /// Rows in the influence-rank table [default: 5]
    #[arg(long, value_name = "K")]
    pub top: Option<usize>,

    /// Accounts with undefined MOI: fail (abort naming the account) or skip
    /// (exclude and keep going) [default: fail]
    #[arg(long, value_name = "POLICY", value_parser = parse_policy)]
    pub zero_follower_policy: Option<ZeroFollowerPolicy>,

    /// Output format: text, json, csv, or dot (dot: report only)
    /// [default: text]
    #[arg(long, value_name = "FORMAT", value_parser = parse_format)]
    pub format: Option<OutputFormat>,

    /// Write the result here instead of stdout; the file appears only on
    /// success [default: stdout]
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

/// Config-file counterpart of [`SharedOpts`]. Unknown keys are rejected so
/// typos fail loudly.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    accounts: Option<PathBuf>,
    edges: Option<PathBuf>,
    posts: Option<PathBuf>,
    mode: Option<String>,
    damping: Option<f64>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    top: Option<usize>,
    zero_follower_policy: Option<String>,
    format: Option<String>,
    output: Option<PathBuf>,
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub paths: DatasetPaths,
    pub mode: EngagementMode,
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub top: usize,
    pub policy: ZeroFollowerPolicy,
    pub format: OutputFormat,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// One human-readable identifier for the dataset, echoed into reports.
    pub fn dataset_label(&self) -> String {
        format!(
            "{}, {}, {}",
            self.paths.accounts.display(),
            self.paths.edges.display(),
            self.paths.posts.display()
        )
    }

    pub fn resolve(opts: &SharedOpts) -> Result<RunConfig, String> {
        let file = match &opts.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
                toml::from_str::<FileConfig>(&text)
                    .map_err(|e| format!("invalid config {}: {e}", path.display()))?
            }
            None => FileConfig::default(),
        };

        let require = |flag: Option<PathBuf>, from_file: Option<PathBuf>, name: &str| {
            flag.or(from_file).ok_or(format!(
                "missing required option --{name} (set it on the command line or in --config)"
            ))
        };
        let paths = DatasetPaths {
            accounts: require(opts.accounts.clone(), file.accounts, "accounts")?,
            edges: require(opts.edges.clone(), file.edges, "edges")?,
            posts: require(opts.posts.clone(), file.posts, "posts")?,
        };

        let mode = match (opts.mode, file.mode) {
            (Some(mode), _) => mode,
            (None, Some(raw)) => raw.parse::<EngagementMode>()?,
            (None, None) => EngagementMode::default(),
        };
        let policy = match (opts.zero_follower_policy, file.zero_follower_policy) {
            (Some(policy), _) => policy,
            (None, Some(raw)) => raw.parse::<ZeroFollowerPolicy>()?,
            (None, None) => ZeroFollowerPolicy::default(),
        };
        let format = match (opts.format, file.format) {
            (Some(format), _) => format,
            (None, Some(raw)) => raw.parse::<OutputFormat>()?,
            (None, None) => OutputFormat::default(),
        };

        let damping = opts.damping.or(file.damping).unwrap_or(0.85);
        if !(0.0..=1.0).contains(&damping) {
            return Err(format!("damping must be within [0, 1], got {damping}"));
        }
        let tol = opts.tol.or(file.tol).unwrap_or(1e-9);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(format!("tol must be a positive finite number, got {tol}"));
        }
        let max_iter = opts.max_iter.or(file.max_iter).unwrap_or(1000);
        if max_iter == 0 {
            return Err("max_iter must be at least 1".to_string());
        }
        let top = opts.top.or(file.top).unwrap_or(5);

        Ok(RunConfig {
            paths,
            mode,
            damping,
            tol,
            max_iter,
            top,
            policy,
            format,
            output: opts.output.clone().or(file.output),
        })
    }
}
