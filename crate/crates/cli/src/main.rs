//! `fhs`: simulate, fit, select, evaluate, replicate and verify.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fhs::simulate::Scenario;
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "fhs", version, about = "Functional horseshoe smoothing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Base seed for every random stream of the run.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Draw a synthetic trend surface and noisy observations.
    Simulate(SimulateArgs),
    /// Run one chain at fixed L and k.
    Fit(FitArgs),
    /// Fit every (L, k) candidate and keep the smallest PPL.
    Select(SelectArgs),
    /// Score a posterior summary against a known truth.
    Metrics(MetricsArgs),
    /// Simulate, select and score several replicates.
    Replicate(ReplicateArgs),
    /// Numeric checks of the prior and of the sampler.
    Verify(VerifyArgs),
    /// Re-execute the command recorded in a manifest.
    Rerun(RerunArgs),
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    Scenario::parse(s).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScenarioArgs {
    /// 1-4 or constant, smooth, piecewise-constant, varying-smoothness.
    #[arg(long, value_parser = parse_scenario)]
    pub scenario: Scenario,
    #[arg(long, default_value_t = 50)]
    pub n_times: usize,
    /// Evaluation points per curve.
    #[arg(long, default_value_t = 120)]
    pub n_points: usize,
    /// Upper end of the domain [1, n].
    #[arg(long, default_value_t = 120.0)]
    pub domain_size: f64,
    #[arg(long, default_value_t = 5.0)]
    pub noise_sd: f64,
    /// Share of pooled observations removed at random.
    #[arg(long, default_value_t = 0.0)]
    pub omit_rate: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorKind {
    /// Half-Cauchy local scales.
    Horseshoe,
    /// Exponential local scales.
    Laplace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Joint,
    Sweep,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = PriorKind::Horseshoe)]
    pub prior: PriorKind,
    #[arg(long, default_value_t = 1.0)]
    pub a_sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b_sigma: f64,
    /// Proper N(0, v G⁻¹) prior on the first k + 1 coefficient vectors.
    #[arg(long)]
    pub level_prior_var: Option<f64>,
    /// Relative diagonal jitter for the prior Gram matrices.
    #[arg(long)]
    pub gram_jitter: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct McmcArgs {
    #[arg(long, default_value_t = 3000)]
    pub burn: usize,
    #[arg(long, default_value_t = 3000)]
    pub draws: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, value_enum, default_value_t = SchemeKind::Joint)]
    pub scheme: SchemeKind,
    /// Evaluate the summary on this many equally spaced points instead of
    /// the observed locations.
    #[arg(long)]
    pub grid_points: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Long-format `t,s,y` file.
    #[arg(long)]
    pub data: PathBuf,
    /// Domain bounds; default to the range of the observed points.
    #[arg(long)]
    pub domain_lo: Option<f64>,
    #[arg(long)]
    pub domain_hi: Option<f64>,
    /// One gap per line between consecutive times (k = 0 only).
    #[arg(long)]
    pub gaps: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Number of basis functions L.
    #[arg(long = "n-basis", short = 'L', default_value_t = 17)]
    pub n_basis: usize,
    /// Difference order k.
    #[arg(long, short = 'k', default_value_t = 0)]
    pub order: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    /// Write draws as text instead of the binary format.
    #[arg(long)]
    pub text_draws: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CandidateArgs {
    #[arg(long, value_delimiter = ',', default_value = "5,9,13,17,21,25")]
    pub l_candidates: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub k_candidates: Vec<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub candidates: CandidateArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    #[arg(long)]
    pub text_draws: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MetricsArgs {
    /// Summary file written by `fit` or `select`.
    #[arg(long)]
    pub summary: PathBuf,
    /// Truth file written by `simulate`.
    #[arg(long)]
    pub truth: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReplicateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 5)]
    pub replicates: usize,
    #[command(flatten)]
    pub candidates: CandidateArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub mcmc: McmcArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 20_000)]
    pub geweke_samples: usize,
    #[arg(long)]
    pub skip_geweke: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RerunArgs {
    /// Manifest file or a run directory containing one.
    pub manifest: PathBuf,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse_from(&argv);
    match commands::dispatch(cli, &argv[1..]) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
