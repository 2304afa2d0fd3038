// SPDX-License-Identifier: Apache-2.0

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Config;

#[derive(Parser, Debug)]
#[command(name = "tlsim", version, about = "Ternary nvSRAM compute-in-memory simulator")]
struct Cli {
    /// JSON configuration; omitted sections take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for stochastic subcommands (overrides `seeds.base`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for report files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Restore-yield sweep over cluster size, cluster count or spread.
    Yield(YieldArgs),
    /// Array MAC against the integer oracle on random instances.
    MacCheck(MacCheckArgs),
    /// Map a model manifest and report capacity.
    Map(MapArgs),
    /// Energy ledgers per architecture.
    Perf(PerfArgs),
    /// Accuracy of the fixture network under trit errors.
    Accuracy(AccuracyArgs),
    /// Storage density table and optional area comparison.
    Density(DensityArgs),
}

#[derive(Args, Debug)]
pub struct YieldArgs {
    /// n, m or sigma
    #[arg(long)]
    pub axis: String,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Args, Debug)]
pub struct MacCheckArgs {
    #[arg(long, default_value_t = 100)]
    pub instances: usize,
}

#[derive(Args, Debug)]
pub struct MapArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Subarrays to spread over (default: as many as the model needs).
    #[arg(long)]
    pub subarrays: Option<usize>,
    /// Fill idle subarrays with whole-layer replicas.
    #[arg(long)]
    pub duplicate: bool,
}

#[derive(Args, Debug)]
pub struct PerfArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Comma-separated: TL, baseline1 .. baseline4.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "TL,baseline1,baseline2,baseline3,baseline4"
    )]
    pub arch: Vec<String>,
    #[arg(long)]
    pub duplicate: bool,
}

#[derive(Args, Debug)]
pub struct AccuracyArgs {
    /// Directory holding model.json, weight files and dataset.csv.
    #[arg(long)]
    pub fixture: PathBuf,
    /// Comma-separated flat trit-error rates.
    #[arg(long, value_delimiter = ',', default_value = "0,0.01,0.05,0.1,0.3")]
    pub rates: Vec<f64>,
    /// Error seeds per rate, counted up from the base seed.
    #[arg(long, default_value_t = 10)]
    pub seeds: usize,
    /// reference or simulated
    #[arg(long, default_value = "simulated")]
    pub engine: String,
    /// Add a row using the restore confusion matrix of the configured device.
    #[arg(long)]
    pub yield_errors: bool,
}

#[derive(Args, Debug)]
pub struct DensityArgs {
    /// Also compare the area of arrays holding this model.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

/// CLI failure with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub kind: &'static str,
    pub message: String,
    pub code: u8,
}

impl From<tlsim_core::Error> for Failure {
    fn from(e: tlsim_core::Error) -> Self {
        let (kind, code) = if e.is_model_failure() {
            ("model_failure", 2)
        } else {
            ("validation", 1)
        };
        Failure {
            kind,
            message: e.to_string(),
            code,
        }
    }
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Failure {
            kind: "validation",
            message: message.into(),
            code: 1,
        }
    }

    pub fn model(message: impl Into<String>) -> Self {
        Failure {
            kind: "model_failure",
            message: message.into(),
            code: 2,
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::validation(format!("thread pool: {e}")))?;
    }
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let ctx = commands::Context {
        seed: cli.seed.or(config.seeds.base),
        hash: config.hash(),
        config,
        out: cli.out,
    };
    match cli.command {
        Command::Yield(a) => commands::yield_cmd(&ctx, &a),
        Command::MacCheck(a) => commands::mac_check(&ctx, &a),
        Command::Map(a) => commands::map(&ctx, &a),
        Command::Perf(a) => commands::perf(&ctx, &a),
        Command::Accuracy(a) => commands::accuracy(&ctx, &a),
        Command::Density(a) => commands::density(&ctx, &a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let line = serde_json::json!({ "error": f.kind, "message": f.message, "exit_code": f.code });
            eprintln!("{line}");
            ExitCode::from(f.code)
        }
    }
}
