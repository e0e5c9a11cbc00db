//! `tspn`: learn an SPN, convert it to a tensor train, query either model
//! and compare the two.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "tspn", version, about = "SPN to tensor-train compression pipeline")]
pub struct Cli {
    /// Seed for every random choice of the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for the parallel loops (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Only print errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    /// JSON file with `learn`, `convert` and `eval` sections; flags win over
    /// it, it wins over defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Learn an SPN from a binary dataset.
    Learn(LearnArgs),
    /// Fit a tensor train to an SPN.
    Convert(ConvertArgs),
    /// Query an SPN or tensor-train model.
    Infer(InferArgs),
    /// Compare an SPN with its tensor train.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
pub struct LearnArgs {
    /// Comma-separated 0/1 rows.
    pub data: PathBuf,
    /// Output SPN (JSON).
    pub out: PathBuf,
    #[arg(long)]
    pub g_test_threshold: Option<f64>,
    #[arg(long)]
    pub min_instances: Option<usize>,
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub kmeans_restarts: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum YScalingArg {
    None,
    MaxNormalize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum InitArg {
    Data,
    Mixture,
    Uniform,
}

#[derive(Args, Debug)]
pub struct ConvertArgs {
    /// SPN model (JSON).
    pub spn: PathBuf,
    /// Training rows the train is fitted on.
    pub data: PathBuf,
    /// Output tensor train (JSON).
    pub out: PathBuf,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub non_sample_ratio: Option<f64>,
    #[arg(long)]
    pub max_sweeps: Option<usize>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long, value_enum)]
    pub y_scaling: Option<YScalingArg>,
    #[arg(long, value_enum)]
    pub init: Option<InitArg>,
    /// Weight of the total-mass row (0 leaves it out).
    #[arg(long)]
    pub mass_weight: Option<f64>,
    /// Largest d for which the total variation distance is computed.
    #[arg(long)]
    pub tv_limit: Option<usize>,
}

#[derive(Args, Debug)]
pub struct InferArgs {
    /// SPN or tensor-train model; the format is detected from the file.
    pub model: PathBuf,
    /// Complete state, e.g. `1,0,1`.
    #[arg(long, conflicts_with_all = ["evidence", "mpe"])]
    pub state: Option<String>,
    /// Partial evidence, e.g. `x1=1,x3=0` (1-based names).
    #[arg(long)]
    pub evidence: Option<String>,
    /// Most probable completion of the evidence (SPN models only).
    #[arg(long)]
    pub mpe: bool,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    pub spn: PathBuf,
    pub tt: PathBuf,
    /// Training split used for the conversion.
    pub train: PathBuf,
    /// Held-out split.
    pub test: PathBuf,
    /// Directory for the report, profile CSV and manifest.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Training non-samples per training row (match the conversion to
    /// reproduce its non-samples).
    #[arg(long)]
    pub non_sample_ratio: Option<f64>,
    #[arg(long)]
    pub tv_limit: Option<usize>,
    /// Also write `profile.svg`.
    #[arg(long)]
    pub svg: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
