//! `rads`: score pools, select samples, run synthetic transfer experiments
//! and compare corpora.
//!
//! Exit codes: 0 on success, 2 for usage or validation errors, 1 for
//! runtime failures.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rads_core::RadsError;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<RadsError> for Failure {
    fn from(e: RadsError) -> Self {
        if e.is_validation() {
            Failure::usage(e.to_string())
        } else {
            Failure::runtime(e.to_string())
        }
    }
}

#[derive(Parser)]
#[command(
    name = "rads",
    version,
    about = "Budgeted RL-driven active sampling for transfer learning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed [default: 0; env RADS_SEED, then config, apply when absent]
    #[arg(long, env = "RADS_SEED", global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the learner on the synthetic source domain and write MC-dropout
    /// scores for an unlabeled pool as JSON lines
    Score(ScoreArgs),
    /// Select samples from a score file with one policy
    Select(SelectArgs),
    /// Run one synthetic transfer experiment over several seeds
    Experiment(ExperimentArgs),
    /// Run a budget sweep of synthetic transfer experiments
    Sweep(SweepArgs),
    /// Lexical divergence between two corpora
    Corpusgap(CorpusGapArgs),
    /// Check a score file and/or a configuration file
    Validate(ValidateArgs),
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    common: Common,
    /// Pool to score: JSON lines of {"id", "features"}; defaults to the
    /// synthetic target training split
    #[arg(long)]
    features: Option<PathBuf>,
    /// MC-dropout forward passes per sample [default: 10]
    #[arg(long)]
    passes: Option<usize>,
    /// Output score file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SamplerFlags {
    /// Redundancy weight lambda [default: 0.01]
    #[arg(long)]
    lambda: Option<f64>,
    /// Desired positive share rho [default: 0.9]
    #[arg(long)]
    rho: Option<f64>,
    /// DQN training episodes [default: 300]
    #[arg(long)]
    episodes: Option<usize>,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    common: Common,
    /// Score file (JSON lines of {"id", "probs"})
    #[arg(long)]
    scores: PathBuf,
    /// rads, random, uncertainty, mi_only or greedy_utility
    #[arg(long, default_value = "rads")]
    policy: String,
    /// Annotation budget (1..=pool size)
    #[arg(long)]
    budget: usize,
    #[command(flatten)]
    sampler: SamplerFlags,
    /// Output selection JSON
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunFlags {
    /// Comma-separated seeds; overrides --runs
    #[arg(long)]
    seeds: Option<String>,
    /// Number of consecutive seeds starting at --seed
    #[arg(long, default_value_t = 5)]
    runs: u64,
    /// MC-dropout forward passes per sample [default: 10]
    #[arg(long)]
    passes: Option<usize>,
    /// Bootstrap resamples for the transfer-gap interval [default: 1000]
    #[arg(long)]
    resamples: Option<usize>,
    /// Output format; inferred from the extension of --out when omitted
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Output report
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    common: Common,
    /// rads, random, uncertainty, mi_only or greedy_utility
    #[arg(long, default_value = "rads")]
    policy: String,
    /// Annotation budget; 0 evaluates zero-shot transfer
    #[arg(long)]
    budget: usize,
    #[command(flatten)]
    sampler: SamplerFlags,
    #[command(flatten)]
    run: RunFlags,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// rads, random, uncertainty, mi_only or greedy_utility
    #[arg(long, default_value = "rads")]
    policy: String,
    /// Comma-separated ascending budgets, e.g. 1,2,4,8,16,32
    #[arg(long)]
    budgets: String,
    #[command(flatten)]
    sampler: SamplerFlags,
    #[command(flatten)]
    run: RunFlags,
}

#[derive(Args)]
struct CorpusGapArgs {
    #[command(flatten)]
    common: Common,
    /// First corpus: a directory of text files or JSON lines of {"id", "text"}
    #[arg(long)]
    a: PathBuf,
    /// Second corpus, same formats
    #[arg(long)]
    b: PathBuf,
    /// Largest n-gram order, 1 or 2 [default: 2]
    #[arg(long)]
    max_n: Option<usize>,
    /// KL smoothing constant [default: 1e-9]
    #[arg(long)]
    epsilon: Option<f64>,
    /// TF-IDF terms reported per corpus [default: 20]
    #[arg(long)]
    top_k: Option<usize>,
    /// Output report JSON
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: Common,
    /// Score file to check
    #[arg(long)]
    scores: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Score(a) => commands::score(a),
        Command::Select(a) => commands::select(a),
        Command::Experiment(a) => commands::experiment(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Corpusgap(a) => commands::corpusgap(a),
        Command::Validate(a) => commands::validate(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
