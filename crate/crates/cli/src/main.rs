mod commands;
mod config;
mod svg;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

const DEFAULT_SEED: u64 = 1;
const DEFAULT_OUTPUT_DIR: &str = "out";

/// Exciting input design, certified affine fits and Koopman surrogates.
#[derive(Parser, Debug)]
#[command(name = "excite-id", version)]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, env = "EXCITE_ID_SEED")]
    seed: Option<u64>,
    /// Worker threads (outputs do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for CSV and SVG outputs.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build an input set and report its excitation.
    Design(DesignArgs),
    /// Report the excitation of an input set read from CSV.
    Analyze(AnalyzeArgs),
    /// Distribution of sigma_min(V)/sqrt(d) for random inputs.
    Montecarlo(MonteCarloArgs),
    /// Flexible-sampling bilinear EDMD from a clustered dataset.
    Fit(FitArgs),
    /// Wendland-kernel EDMD.
    Kedmd(KedmdArgs),
    /// Differential-drive robot benchmark.
    Robot(RobotArgs),
}

#[derive(Args, Debug)]
pub struct DesignArgs {
    /// orthogonal, simplex, random or angle.
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Number of inputs minus one.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Input norm bound.
    #[arg(long)]
    pub r_u: Option<f64>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// CSV with header u0,..,u{m-1}.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub r_u: Option<f64>,
}

#[derive(Args, Debug)]
pub struct MonteCarloArgs {
    #[arg(long)]
    pub m: Option<usize>,
    /// Comma-separated observation counts.
    #[arg(long, value_delimiter = ',')]
    pub d: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Scale every input to unit length.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub normalize: Option<bool>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// CSV with header cluster_id,x..,u..,y...
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// identity, affine or unicycle.
    #[arg(long)]
    pub dictionary: Option<String>,
    /// operator or generator.
    #[arg(long)]
    pub mode: Option<String>,
    /// Disturbance radius for the error bound.
    #[arg(long)]
    pub r_eps: Option<f64>,
}

#[derive(Args, Debug)]
pub struct KedmdArgs {
    /// CSV with header x0..,y0.. (node, successor).
    #[arg(long, conflicts_with = "dataset")]
    pub nodes: Option<PathBuf>,
    /// Clustered dataset for the control-affine fit; centers become nodes.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// State dimension of the kernel.
    #[arg(long)]
    pub n: Option<usize>,
    /// Wendland smoothness.
    #[arg(long)]
    pub k: Option<usize>,
    /// Support radius.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Probe points per axis for the fill distance estimate.
    #[arg(long)]
    pub probes: Option<usize>,
    #[arg(long)]
    pub r_eps: Option<f64>,
}

#[derive(Args, Debug)]
pub struct RobotArgs {
    /// Skip the SVG plots.
    #[arg(long)]
    pub no_svg: bool,
}

pub struct RunContext {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub config: RunConfig,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(n) = cli.threads.or(config.threads) {
        anyhow::ensure!(n >= 1, "--threads must be >= 1");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure thread pool")?;
    }
    let ctx = RunContext {
        seed: cli.seed.or(config.seed).unwrap_or(DEFAULT_SEED),
        output_dir: cli
            .output_dir
            .or_else(|| config.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
        config,
    };
    match cli.command {
        Command::Design(a) => commands::design(&a, &ctx),
        Command::Analyze(a) => commands::analyze(&a, &ctx),
        Command::Montecarlo(a) => commands::montecarlo(&a, &ctx),
        Command::Fit(a) => commands::fit(&a, &ctx),
        Command::Kedmd(a) => commands::kedmd(&a, &ctx),
        Command::Robot(a) => commands::robot(&a, &ctx),
    }
}

/// 2 for numerical failures, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err
        .chain()
        .any(|c| c.downcast_ref::<excite_id::Error>().is_some_and(|e| e.is_numerical()));
    if numerical {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
