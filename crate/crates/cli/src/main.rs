//! `spectral-comm` command-line front end.
//!
//! Exit status: 0 on success, 1 on usage or validation errors, 2 when a
//! computation fails.

#![allow(clippy::needless_range_loop)]

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spectral_comm::io::{DiagonalPolicy, Indexing};
use spectral_comm::{KChoice, Method};

#[derive(Parser, Debug)]
#[command(name = "spectral-comm", version, about = "Spectral community detection under block models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a network from a model config or experiment preset.
    Generate(GenerateArgs),
    /// Cluster the nodes of an edge-list network.
    Detect(DetectArgs),
    /// Estimate the number of communities.
    EstimateK(EstimateArgs),
    /// Estimate the number of communities over a grid of delta values.
    SweepK(SweepArgs),
    /// Run a Monte-Carlo experiment and write a summary table.
    Benchmark(BenchmarkArgs),
    /// Numerically check the population identities and convergence rates.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct GraphInput {
    /// Edge list: one whitespace-separated pair of node ids per line.
    #[arg(long)]
    edges: PathBuf,
    /// Index base of the node ids (0 or 1).
    #[arg(long, default_value = "1")]
    indexing: Indexing,
    /// Diagonal policy: force-ones or keep.
    #[arg(long, default_value = "force-ones")]
    diag: DiagonalPolicy,
    /// Restrict to the largest connected component.
    #[arg(long)]
    lcc: bool,
}

#[derive(Args, Debug)]
struct ModelSource {
    /// TOML model template.
    #[arg(long, conflicts_with = "experiment")]
    config: Option<PathBuf>,
    /// Built-in experiment preset: exp1, exp2, exp3 or exp4.
    #[arg(long)]
    experiment: Option<String>,
    /// Heterogeneity case of exp4 (1 linear, 2 quadratic, 3 step).
    #[arg(long)]
    case: Option<u8>,
    /// Node count (overrides the config or preset).
    #[arg(long)]
    n: Option<usize>,
    /// Community count for presets (2 or 3).
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    model: ModelSource,
    #[arg(long)]
    seed: u64,
    /// Edge-list output (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the planted labels.
    #[arg(long)]
    labels_out: Option<PathBuf>,
    /// Index base for written node ids.
    #[arg(long, default_value = "1")]
    indexing: Indexing,
}

#[derive(Args, Debug)]
struct DetectArgs {
    #[command(flatten)]
    input: GraphInput,
    #[arg(long, default_value = "scdre")]
    method: Method,
    /// `auto` or a positive integer.
    #[arg(long, default_value = "auto")]
    k: KChoice,
    #[arg(long, default_value_t = spectral_comm::estimate::DEFAULT_DELTA)]
    delta: f64,
    #[arg(long)]
    seed: u64,
    /// Labels CSV output (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// True labels; prints the relative error rate.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[command(flatten)]
    input: GraphInput,
    #[arg(long, default_value_t = spectral_comm::estimate::DEFAULT_DELTA)]
    delta: f64,
    /// Full ratio table as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    input: GraphInput,
    #[arg(long, default_value_t = 0.02)]
    delta_min: f64,
    #[arg(long, default_value_t = 0.044)]
    delta_max: f64,
    #[arg(long, alias = "delta-step", default_value_t = 0.002)]
    step: f64,
    /// CSV output (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    /// Built-in experiment preset: exp1, exp2, exp3 or exp4.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    experiment: Option<String>,
    /// TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    case: Option<u8>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated methods (default: all four).
    #[arg(long, value_delimiter = ',')]
    methods: Vec<Method>,
    /// Report CSV (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// transform, noise-norm, linf, separation or ratios.
    #[arg(long)]
    check: commands::Check,
    #[command(flatten)]
    model: ModelSource,
    /// Comma-separated node counts (default: the model's n).
    #[arg(long, value_delimiter = ',')]
    sweep: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    /// Per-repetition CSV (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("SPECTRAL_COMM_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("SPECTRAL_COMM_THREADS must be a positive integer, got '{raw}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    let result = match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Detect(a) => commands::detect(a),
        Command::EstimateK(a) => commands::estimate_k(a),
        Command::SweepK(a) => commands::sweep_k(a),
        Command::Benchmark(a) => commands::benchmark(a),
        Command::Verify(a) => commands::verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
