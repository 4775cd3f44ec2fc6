use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "namescarcity", version, about = "Tests groups of people for a scarcity of distinct names")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the scarcity test on a roster and write CSV, JSON and text reports.
    Analyze(AnalyzeArgs),
    /// Generate a synthetic roster and, optionally, a power curve.
    Simulate(SimulateArgs),
    /// Name frequencies, women fractions and the logit diagnostic.
    Diagnose(DiagnoseArgs),
    /// q-values for a CSV of `group,p` rows.
    Qvalues(QvaluesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FieldArg {
    Last,
    First,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StratifyArg {
    None,
    Region,
    MacroRegion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    /// Uppercase, strip spaces and apostrophes, keep the part before a
    /// hyphen, drop parentheticals.
    Uk,
    /// Uppercase and strip spaces and apostrophes only.
    Italian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScopeArg {
    All,
    Female,
    Male,
}

/// Roster input options shared by `analyze` and `diagnose`.
#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Roster CSV file.
    pub input: PathBuf,
    /// Column mapping, e.g. `last_name=surname,group=sector`.
    #[arg(long)]
    pub schema: Option<String>,
    /// Field delimiter of the roster file.
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// Name normalization policy.
    #[arg(long, value_enum, default_value_t = PolicyArg::Uk)]
    pub policy: PolicyArg,
    /// Drop duplicate (last name, initials, group) records.
    #[arg(long)]
    pub dedup: bool,
    /// Comma-separated group labels to leave out.
    #[arg(long)]
    pub exclude_groups: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct QArgs {
    /// Use this pi0 instead of estimating it.
    #[arg(long)]
    pub pi0: Option<f64>,
    /// Bootstrap resamples for the pi0 estimate.
    #[arg(long, default_value_t = 100)]
    pub n_bootstrap: usize,
    /// Seed of the pi0 bootstrap.
    #[arg(long, default_value_t = 0)]
    pub q_seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = FieldArg::Last)]
    pub field: FieldArg,
    /// Monte Carlo samples per group.
    #[arg(long, default_value_t = 100_000)]
    pub sims: usize,
    /// Groups smaller than this are reported but not tested.
    #[arg(long, default_value_t = 50)]
    pub min_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long, value_enum, default_value_t = StratifyArg::None)]
    pub stratify: StratifyArg,
    /// Add separate female and male analyses.
    #[arg(long)]
    pub gender_split: bool,
    /// Add an analysis restricted to the names listed in FILE.
    #[arg(long, value_name = "FILE")]
    pub filter_common: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// `region = macro-region` lines replacing the built-in Italian map.
    #[arg(long, value_name = "FILE")]
    pub macro_map: Option<PathBuf>,
    #[command(flatten)]
    pub q: QArgs,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Record the wall-clock time in the JSON report.
    #[arg(long)]
    pub timestamp: bool,
    /// Do not print the table to stdout.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// `key = value` generator configuration; defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the N most likely names of the generator's law.
    #[arg(long, value_name = "N")]
    pub common_names: Option<usize>,
    /// Comma-separated nepotism rates for a power curve.
    #[arg(long, value_delimiter = ',')]
    pub rho: Option<Vec<f64>>,
    /// Group receiving nepotism in the power curve.
    #[arg(long, default_value = "G01")]
    pub target: String,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 10_000)]
    pub sims: usize,
    #[arg(long, default_value_t = 50)]
    pub min_size: usize,
    /// Seed of the Monte Carlo tests in the power curve.
    #[arg(long, default_value_t = 0)]
    pub test_seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = ScopeArg::All)]
    pub scope: ScopeArg,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = FieldArg::First)]
    pub field: FieldArg,
    /// Names listed per group.
    #[arg(long, default_value_t = 1)]
    pub top: usize,
    /// CSV with `group` and `p` columns (an `analyze` report works) for the
    /// logit fit against the women fraction.
    #[arg(long, value_name = "FILE")]
    pub pvalues: Option<PathBuf>,
    /// Stratum read from a long-format p-value file.
    #[arg(long, default_value = "all")]
    pub stratum: String,
    /// p-values are clamped into [eps, 1 - eps] before the logit.
    #[arg(long, default_value_t = 1e-6)]
    pub clamp: f64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct QvaluesArgs {
    /// CSV with `group` and `p` columns.
    pub input: PathBuf,
    /// Only rows of this stratum when the file has a `stratum` column.
    #[arg(long)]
    pub stratum: Option<String>,
    #[command(flatten)]
    pub q: QArgs,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}
