use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ergm", version, about = "Simulate, fit and diagnose exponential random graph models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw networks from the model by Metropolis-Hastings.
    Simulate(SimulateArgs),
    /// Maximum pseudolikelihood fit.
    FitMple(FitMpleArgs),
    /// Monte Carlo maximum likelihood fit.
    FitMcmle(FitMcmleArgs),
    /// Parametric bootstrap of the pseudolikelihood estimate.
    Bootstrap(BootstrapArgs),
    /// Goodness-of-fit and degeneracy checks on simulated statistics.
    Diagnose(DiagnoseArgs),
    /// Simulation studies comparing the estimators.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Master seed; every random stream is derived from it.
    #[arg(long, env = "ERGM_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses all available cores.
    #[arg(long, env = "ERGM_CORES", default_value_t = 0)]
    pub cores: usize,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct NetworkArgs {
    /// Edge-list CSV with header `source,target`.
    #[arg(long, required_unless_present = "nodes")]
    pub graph: Option<PathBuf>,
    /// Attribute CSV with header `node,<name>,...`.
    #[arg(long)]
    pub attrs: Option<PathBuf>,
    /// Start from the empty graph on this many nodes instead of `--graph`.
    #[arg(long, conflicts_with = "graph")]
    pub nodes: Option<usize>,
    /// TOML model file with `[[term]]` tables.
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SamplerArgs {
    /// MH steps before the first retained draw.
    #[arg(long)]
    pub burn_in: Option<u64>,
    /// MH steps between retained draws.
    #[arg(long)]
    pub interval: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub network: NetworkArgs,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    /// Coefficients, comma separated; defaults to `theta` in the model file.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1000)]
    pub num_samples: usize,
    /// Independent chains sharing the draws.
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    /// Also write every retained network as an edge list.
    #[arg(long)]
    pub save_networks: bool,
}

#[derive(Debug, Args)]
pub struct FitMpleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub network: NetworkArgs,
}

#[derive(Debug, Args)]
pub struct FitMcmleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub network: NetworkArgs,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    /// Simulated networks per round.
    #[arg(long, default_value_t = 1000)]
    pub sample_size: usize,
    #[arg(long, default_value_t = 3)]
    pub rounds: usize,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    /// Starting coefficients; the MPLE when absent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub initial: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub network: NetworkArgs,
    #[arg(long, default_value_t = 500)]
    pub replicates: usize,
    /// MH steps used to simulate each replicate network.
    #[arg(long)]
    pub burn_in: Option<u64>,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = 0.1)]
    pub max_failure_fraction: f64,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub network: NetworkArgs,
    /// Statistics CSV from `simulate`; when absent the sample is drawn here.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1000)]
    pub num_samples: usize,
    /// Off-center threshold in standard errors of the mean.
    #[arg(long, default_value_t = 2.0)]
    pub z: f64,
    /// Also render the trace and density panels as SVG.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StudyKind {
    Rmse,
    Coverage,
    Timing,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub kind: StudyKind,
    #[command(flatten)]
    pub common: CommonArgs,
    /// TOML study configuration overriding the built-in defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base network; a synthetic one is used when absent.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, requires = "graph")]
    pub attrs: Option<PathBuf>,
    /// Number of study networks `m`.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Use the large replicate counts and sample grids instead of the desktop defaults.
    #[arg(long)]
    pub full_scale: bool,
    #[arg(long)]
    pub svg: bool,
}
