//! `mosbench`: MOS processing, benchmark evaluation, data preparation and
//! the annotation server behind one command.
//!
//! Exit status is 0 on success, 1 when a computation or output write fails
//! and 2 for usage mistakes or unusable input.

pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mosbench_core::mos::DegenerateSigma;

pub use crate::config::RunConfig;
pub use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "mosbench", version, about = "Mean-opinion-score processing and text-to-video benchmark evaluation")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for every random draw
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Screen raters and compute per-video MOS, QA answers and model scorecards
    Mos(MosArgs),
    /// Score a metric submission against human MOS
    Eval(EvalArgs),
    /// Split the dataset, discretize scores and sample grid mini-patches
    Prep(PrepArgs),
    /// Run the annotation server
    Serve(ServeArgs),
    /// Check a study for invariant violations
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SigmaPolicy {
    Exclude,
    Midpoint,
}

impl From<SigmaPolicy> for DegenerateSigma {
    fn from(p: SigmaPolicy) -> Self {
        match p {
            SigmaPolicy::Exclude => DegenerateSigma::Exclude,
            SigmaPolicy::Midpoint => DegenerateSigma::Midpoint,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct MosArgs {
    /// Study directory (CSV) or `.json` document
    #[arg(long)]
    pub study: Option<PathBuf>,
    /// Handling of raters whose scores on a dimension are all equal
    #[arg(long, value_enum)]
    pub degenerate_sigma: Option<SigmaPolicy>,
    /// Drop a rater's subtask votes on videos where one of their scores was rejected
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub drop_votes_on_score_rejection: Option<bool>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EvalArgs {
    /// Study that maps videos to models and prompts
    #[arg(long)]
    pub study: Option<PathBuf>,
    /// Ground-truth mos.json; recomputed from the study if omitted
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Submission CSV: video_id plus any of perception, correspondence, overall, qa
    #[arg(long)]
    pub submission: Option<PathBuf>,
    /// Name shown in the report; defaults to the submission file stem
    #[arg(long)]
    pub metric_name: Option<String>,
    /// Models of the zero-shot subset, comma separated
    #[arg(long, value_delimiter = ',')]
    pub zero_shot: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PrepArgs {
    /// CSV with a prompt_id column; enables the train/test split
    #[arg(long)]
    pub prompts: Option<PathBuf>,
    /// All model ids, comma separated
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    /// Models that also generate training videos, comma separated
    #[arg(long, value_delimiter = ',')]
    pub train_models: Option<Vec<String>>,
    /// Number of prompts held out for testing
    #[arg(long)]
    pub test_prompts: Option<usize>,
    /// mos.json to discretize into five quality levels
    #[arg(long)]
    pub mos: Option<PathBuf>,
    /// Lowest score of the label range; defaults to the observed minimum
    #[arg(long, allow_hyphen_values = true)]
    pub label_min: Option<f64>,
    /// Highest score of the label range; defaults to the observed maximum
    #[arg(long, allow_hyphen_values = true)]
    pub label_max: Option<f64>,
    /// Directory of per-video frame dumps (`{video}/*.mbar`, u8)
    #[arg(long)]
    pub frames: Option<PathBuf>,
    /// Grid cells per side
    #[arg(long)]
    pub grid: Option<usize>,
    /// Mini-patch side in pixels
    #[arg(long)]
    pub patch: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ServeArgs {
    /// Store directory; defaults to --out
    #[arg(long)]
    pub store: Option<PathBuf>,
    /// Listen address
    #[arg(long)]
    pub addr: Option<String>,
    /// Bearer token required to create studies
    #[arg(long)]
    pub admin_token: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ValidateArgs {
    /// Study directory (CSV) or `.json` document
    #[arg(long)]
    pub study: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code().clamp(0, 255) as u8;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let config = match &cli.common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let common = &cli.common;
    match &cli.command {
        Command::Mos(args) => commands::mos::run(common, args, &config),
        Command::Eval(args) => commands::eval::run(common, args, &config),
        Command::Prep(args) => commands::prep::run(common, args, &config),
        Command::Serve(args) => commands::serve::run(common, args, &config),
        Command::Validate(args) => commands::validate::run(common, args, &config),
    }
}
