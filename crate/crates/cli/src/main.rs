//! `stepgame`: build, audit and inspect spatial reasoning datasets.
//!
//! Machine-readable JSON goes to stdout, human summaries to stderr.
//! Set `STEPGAME_LOG` (error, warn, info, debug) to control stderr output.
//! Exit codes: 0 success, 1 a check failed, 2 bad usage or unreadable input.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{Profile, RunConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or unreadable input. Exit code 2.
    Usage(String),
    /// A validation or generation check failed. Exit code 1.
    Failed(String),
}

#[derive(Parser)]
#[command(name = "stepgame", version, about = "Multi-hop spatial reasoning dataset generator and verifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate train/valid/test splits and a manifest.
    Gen(Box<GenArgs>),
    /// Re-certify every sample of a dataset file or directory.
    Validate {
        /// A .jsonl file, or a directory holding train/valid/test.jsonl.
        path: PathBuf,
        #[arg(long)]
        bank: Option<PathBuf>,
        #[arg(long, default_value_t = stepgame::noise::DEFAULT_SUPPORTING_MIN_K)]
        supporting_min_k: usize,
    },
    /// Count test samples whose canonical key also occurs in training data.
    Leakage { train: PathBuf, test: PathBuf },
    /// Per-k noise statistics of a dataset file.
    Stats { path: PathBuf },
    /// Number of distinct samples with k hops over E entities.
    Count { k: usize, entities: usize },
    /// Answer a question about a story.
    Solve(SolveArgs),
    /// Structural checks of the TP-MANN forward pass.
    TpmannCheck(TpmannArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Args)]
struct GenArgs {
    /// TOML file with any of the settings below; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Train/valid chain lengths, MIN..MAX.
    #[arg(long)]
    k_train: Option<String>,
    /// Test chain lengths, MIN..MAX.
    #[arg(long)]
    k_test: Option<String>,
    /// Train samples per k.
    #[arg(long)]
    train_n: Option<usize>,
    /// Valid samples per k.
    #[arg(long)]
    valid_n: Option<usize>,
    /// Test samples per k.
    #[arg(long)]
    test_n: Option<usize>,
    #[arg(long, value_name = "MIN..MAX")]
    noise_irrelevant: Option<String>,
    #[arg(long, value_name = "MIN..MAX")]
    noise_disconnected: Option<String>,
    #[arg(long, value_name = "MIN..MAX")]
    noise_supporting: Option<String>,
    /// Smallest k that receives supporting noise.
    #[arg(long)]
    supporting_min_k: Option<usize>,
    #[arg(long)]
    bank: Option<PathBuf>,
    /// jsonl or babi.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add noise to train and valid as well as test.
    #[arg(long, value_enum)]
    train_noise: Option<OnOff>,
    #[arg(long, value_enum)]
    profile: Option<Profile>,
}

impl GenArgs {
    fn into_config(self) -> (Option<PathBuf>, RunConfig) {
        let cfg = RunConfig {
            seed: self.seed,
            k_train: self.k_train,
            k_test: self.k_test,
            train_n: self.train_n,
            valid_n: self.valid_n,
            test_n: self.test_n,
            noise_irrelevant: self.noise_irrelevant,
            noise_disconnected: self.noise_disconnected,
            noise_supporting: self.noise_supporting,
            supporting_min_k: self.supporting_min_k,
            bank: self.bank,
            format: self.format,
            workers: self.workers,
            out: self.out,
            train_noise: self.train_noise.map(|v| matches!(v, OnOff::On)),
            profile: self.profile,
        };
        (self.config, cfg)
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Story file, one sentence or `(head,relation,tail)` triple per line.
    story_file: Option<PathBuf>,
    /// Inline story; sentences or triples separated by `;`.
    #[arg(long, conflicts_with = "story_file")]
    story: Option<String>,
    /// Entities to compare as `X,Y`: where is X relative to Y.
    #[arg(long)]
    question: String,
    #[arg(long)]
    bank: Option<PathBuf>,
}

#[derive(Args)]
struct TpmannArgs {
    #[arg(long, default_value_t = 256)]
    d: usize,
    #[arg(long, default_value_t = 200)]
    d_e: usize,
    #[arg(long, default_value_t = 80)]
    d_r: usize,
    #[arg(long, default_value_t = 200)]
    hidden: usize,
    #[arg(long, default_value_t = stepgame::tpr::model::DEFAULT_LAYERS)]
    layers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    recovery_instances: usize,
    #[arg(long, default_value_t = 1000)]
    finite_seeds: usize,
    /// Template bank the vocabulary is built from.
    #[arg(long)]
    bank: Option<PathBuf>,
    /// Leave the initial memory out of the trainable parameters.
    #[arg(long)]
    fixed_memory: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("STEPGAME_LOG", "info"))
        .format_timestamp(None)
        .format_target(false)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => {
            let (path, flags) = (*args).into_config();
            commands::gen(path.as_deref(), flags)
        }
        Command::Validate { path, bank, supporting_min_k } => commands::validate(&path, bank.as_deref(), supporting_min_k),
        Command::Leakage { train, test } => commands::leakage(&train, &test),
        Command::Stats { path } => commands::stats(&path),
        Command::Count { k, entities } => commands::count(k, entities),
        Command::Solve(a) => commands::solve(a.story_file.as_deref(), a.story.as_deref(), &a.question, a.bank.as_deref()),
        Command::TpmannCheck(a) => commands::tpmann_check(&commands::TpmannOptions {
            d: a.d,
            d_e: a.d_e,
            d_r: a.d_r,
            hidden: a.hidden,
            layers: a.layers,
            seed: a.seed,
            recovery_instances: a.recovery_instances,
            finite_seeds: a.finite_seeds,
            bank: a.bank,
            trainable_memory: !a.fixed_memory,
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failed(msg)) => {
            log::error!("{msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            log::error!("{msg}");
            ExitCode::from(2)
        }
    }
}
