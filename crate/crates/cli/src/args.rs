use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "resamplex",
    version,
    about = "Resampling estimation, exact variance, sample-size optimization and coverage analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate E φ(X) from samples (observed, or synthetic from the model laws).
    Estimate(EstimateArgs),
    /// Exact or Monte Carlo variance of the resampling estimator.
    Variance(VarianceArgs),
    /// Optimal per-node sample sizes under a linear budget.
    Optimize(OptimizeArgs),
    /// Estimators for models where some input laws are known.
    Partial(PartialArgs),
    /// Actual coverage of the resampling upper confidence bound.
    Coverage(CoverageArgs),
    /// Regenerate a reference table.
    Reproduce(ReproduceArgs),
    /// List the built-in scenarios.
    List(OutputArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Built-in scenario name (see `list`).
    #[arg(long, required_unless_present = "config", conflicts_with = "config")]
    pub scenario: Option<String>,
    /// Model file (TOML, or JSON by extension).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Pool sizes, one per sampled input.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Threshold for time-indexed functionals.
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    /// Several thresholds; one result row each.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "t")]
    pub t_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateMethod {
    Simple,
    Hierarchical,
    Plugin,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of resampling realizations.
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long, value_enum, default_value = "simple")]
    pub method: EstimateMethod,
    /// Draws per realization (coverage scenarios).
    #[arg(long, default_value_t = 1)]
    pub batch: usize,
    /// Confidence level of the reported upper bound (coverage scenarios).
    #[arg(long)]
    pub gamma: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Simple,
    Hierarchical,
}

#[derive(Debug, Clone, Args)]
pub struct VarianceArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Needed only when the Monte Carlo fallback runs.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long, value_enum, default_value = "simple")]
    pub scheme: Scheme,
    /// Largest exact enumeration before falling back to Monte Carlo.
    #[arg(long)]
    pub cap: Option<u64>,
    /// Monte Carlo replications for the fallback.
    #[arg(long)]
    pub mc: Option<u64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Total budget Σ a_v n_v (default: cost of the model's current sizes).
    #[arg(long)]
    pub budget: Option<u64>,
    /// Cost per node, in node order (default: 1 everywhere).
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<u64>>,
    /// Also run the exhaustive search and report whether it agrees.
    #[arg(long)]
    pub oracle: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Situation {
    /// Average the conditional expectation given the resampled inputs.
    Known,
    /// Draw the known inputs `replicates` times per realization.
    Simulated,
}

#[derive(Debug, Clone, Args)]
pub struct PartialArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long, value_enum, default_value = "known")]
    pub situation: Situation,
    /// Replicates N of the known inputs per realization.
    #[arg(long)]
    pub replicates: Option<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CoverageArgs {
    /// `min-selection` or `ordering` scenario for defaults.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// min-selection or ordering.
    #[arg(long)]
    pub functional: Option<String>,
    /// One or more confidence levels.
    #[arg(long, value_delimiter = ',')]
    pub gamma: Option<Vec<f64>>,
    #[arg(long)]
    pub r: Option<usize>,
    /// Draws averaged per realization.
    #[arg(long, default_value_t = 1)]
    pub batch: usize,
    /// Enumerate every protocol (fails past the cap).
    #[arg(long, conflicts_with_all = ["mc", "simulate"])]
    pub exact: bool,
    /// Sample this many protocols instead of enumerating.
    #[arg(long, value_name = "RUNS", conflicts_with = "simulate")]
    pub mc: Option<u64>,
    /// Simulate the whole procedure this many times.
    #[arg(long, value_name = "RUNS")]
    pub simulate: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest protocol count enumerated exactly.
    #[arg(long)]
    pub cap: Option<u128>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    /// table1, table2, table5-direction, table6-scan or table7-scan.
    pub table: String,
    #[arg(long, default_value_t = 5)]
    pub r_min: usize,
    #[arg(long, default_value_t = 200)]
    pub r_max: usize,
    /// Draws per realization in the scans.
    #[arg(long, default_value_t = 1)]
    pub batch: usize,
    /// Sampled protocols for rows too large to enumerate.
    #[arg(long, default_value_t = 2_000_000)]
    pub samples: u64,
    /// Seed for sampled protocols.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}
