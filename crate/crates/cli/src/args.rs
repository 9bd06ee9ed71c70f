use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tailwright::dist::TailStatistic;
use tailwright::ingest::DEFAULT_SESSION_LENGTH;

pub const DEFAULT_MODELS: &str = "exponential,weibull,lognormal";

#[derive(Debug, Parser)]
#[command(name = "tailwright", version, about = "Waiting-time distribution analysis for price-change events")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit models to each series: parameters, K-L, K-S p-value, CV BIC,
    /// power-law tail, and diagnostic point files.
    Fit(FitArgs),
    /// K-L divergence and cross-validated BIC per model and series.
    Compare(CompareArgs),
    /// Power-law tail test per series (Table-3 style CSV plus JSON sidecar).
    Powerlaw(PowerlawArgs),
    /// Run the El Farol market and write its price changes as an event CSV.
    Simulate(SimulateArgs),
    /// Grid search over agent count and offer size against a target series.
    Sweep(SweepArgs),
    /// Merge JSON reports into Table 1/2/3 style CSVs.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Event CSV with header `pair_side,timestamp[,day]`.
    #[arg(long)]
    pub input: PathBuf,
    /// Seconds per trading session.
    #[arg(long, default_value_t = DEFAULT_SESSION_LENGTH)]
    pub session_length: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SeedArgs {
    /// Random seed; falls back to TAILWRIGHT_SEED, then to 0.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Comma-separated model names.
    #[arg(long, value_delimiter = ',', default_value = DEFAULT_MODELS)]
    pub models: Vec<String>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
}

#[derive(Debug, Clone, Args)]
pub struct TailArgs {
    /// Bootstrap replicates for the power-law p-value (at least 100).
    #[arg(long, default_value_t = 1000)]
    pub n_boot: usize,
    /// Distance that selects tau_min and drives the bootstrap: ks or dstar.
    #[arg(long, default_value = "ks")]
    pub tail_statistic: TailStatistic,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Output directory for fit_report.json and point files.
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub models: ModelArgs,
    #[command(flatten)]
    pub tail: TailArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Output JSON report.
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub models: ModelArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
}

#[derive(Debug, Args)]
pub struct PowerlawArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Output CSV; a JSON sidecar is written next to it.
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub tail: TailArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
}

/// Game parameters; unset flags fall back to `--config`, then to defaults.
#[derive(Debug, Clone, Args)]
pub struct GameArgs {
    /// JSON file with GameConfig fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of agents N.
    #[arg(long)]
    pub agents: Option<usize>,
    /// History length m.
    #[arg(long)]
    pub memory: Option<u32>,
    /// Strategies per agent s.
    #[arg(long)]
    pub strategies: Option<usize>,
    /// Offer size L.
    #[arg(long)]
    pub offer: Option<usize>,
    /// Recorded steps (seconds).
    #[arg(long)]
    pub steps: Option<u64>,
    /// Unrecorded warm-up steps.
    #[arg(long)]
    pub burn_in: Option<u64>,
    #[command(flatten)]
    pub seed: SeedArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub game: GameArgs,
    /// Output event CSV.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value = tailwright::elfarol::DEFAULT_PAIR_SIDE)]
    pub pair_side: String,
    /// Long runs are cut into sessions of this many seconds.
    #[arg(long, default_value_t = DEFAULT_SESSION_LENGTH)]
    pub session_length: u64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Target event CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Series of the target to match; defaults to the first.
    #[arg(long)]
    pub pair_side: Option<String>,
    #[arg(long, default_value_t = DEFAULT_SESSION_LENGTH)]
    pub session_length: u64,
    /// Agent counts to try.
    #[arg(long, value_delimiter = ',', default_value = "5,10,15")]
    pub agents_grid: Vec<usize>,
    /// Offer sizes to try.
    #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
    pub offer_grid: Vec<usize>,
    #[command(flatten)]
    pub game: GameArgs,
    /// Output JSON.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// JSON reports written by fit, compare or powerlaw.
    #[arg(long = "input", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Output directory for table1.csv, table2.csv, table3.csv and tables.json.
    #[arg(long)]
    pub output: PathBuf,
}
