//! `tapgrowth` - simulate, calibrate and analyze the combinatorial growth
//! model from the command line.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 divergence
//! before the requested horizon without `--allow-divergence`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod summary;
mod svg;
mod trajectory_io;

use config::{parse_mode, parse_quantity, RunConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration (exit 2).
    Config(String),
    /// Bad or missing data (exit 3).
    Data(String),
    /// Model blew up inside the horizon without --allow-divergence (exit 4).
    Divergence { year: i32 },
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration: {msg}"),
            CliError::Data(msg) => write!(f, "data: {msg}"),
            CliError::Divergence { year } => write!(
                f,
                "simulation diverged at year {year}, before the requested horizon end \
                 (pass --allow-divergence to keep the truncated trajectory)"
            ),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Divergence { .. } => 4,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "tapgrowth",
    version,
    about = "Combinatorial growth model: simulation, calibration, Monte Carlo takeoff analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory and write trajectory.csv, summary.json, plot.svg
    Simulate(RunArgs),
    /// Fit p (and optionally m0) to the GDP benchmark
    Calibrate(RunArgs),
    /// Monte Carlo takeoff-time study over stochastic runs
    Ensemble(RunArgs),
    /// Report on an existing trajectory CSV
    Analyze(AnalyzeArgs),
}

/// Configuration shared by every subcommand. Precedence: defaults, then
/// --config file, then --preset, then these flags.
#[derive(Args)]
struct RunArgs {
    /// Config file: flat `key = value` lines or a JSON object
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named parameterization: m50-d006, m50-d0 or m88-d006
    #[arg(long)]
    preset: Option<String>,
    /// Total output at the horizon start
    #[arg(long)]
    y0: Option<f64>,
    /// Initial number of distinct goods
    #[arg(long)]
    m0: Option<f64>,
    /// Per-combination success scale
    #[arg(long)]
    p: Option<f64>,
    /// Size-penalty scale of the alpha schedule
    #[arg(long)]
    theta: Option<f64>,
    /// Size-penalty exponent of the alpha schedule
    #[arg(long)]
    rho: Option<f64>,
    /// Largest combination size with non-zero success probability
    #[arg(long)]
    cutoff: Option<u32>,
    /// Population at the horizon start
    #[arg(long)]
    l0: Option<f64>,
    /// Capital share of output
    #[arg(long)]
    beta: Option<f64>,
    /// Saving rate
    #[arg(long)]
    s: Option<f64>,
    /// Capital depreciation rate
    #[arg(long)]
    delta: Option<f64>,
    /// Year range START:END (astronomical years, 0 = 1 BC)
    #[arg(long, value_name = "START:END")]
    horizon: Option<String>,
    /// deterministic or stochastic
    #[arg(long)]
    mode: Option<String>,
    /// Seed (stochastic runs) / master seed (ensembles)
    #[arg(long)]
    seed: Option<u64>,
    /// Population CSV (year,population)
    #[arg(long)]
    population: Option<PathBuf>,
    /// GDP benchmark CSV (year,gdp)
    #[arg(long)]
    benchmark: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of ensemble runs
    #[arg(long)]
    runs: Option<usize>,
    /// Takeoff rule: trailing window length in years
    #[arg(long)]
    window: Option<u32>,
    /// Takeoff rule: annualized log-growth threshold
    #[arg(long)]
    threshold: Option<f64>,
    /// Takeoff rule: watched quantity, Y or M
    #[arg(long)]
    quantity: Option<String>,
    /// Ensemble horizon auto-extension cap (year); default: no extension
    #[arg(long)]
    cap: Option<i32>,
    /// Calibration grid points per free dimension
    #[arg(long)]
    grid: Option<usize>,
    /// Maximum simplex iterations
    #[arg(long)]
    refine_iters: Option<usize>,
    /// Also fit m0 (default: p only)
    #[arg(long)]
    free_m0: bool,
    /// Keep a truncated trajectory instead of exiting 4 on blow-up
    #[arg(long)]
    allow_divergence: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Trajectory CSV to analyze (as written by `simulate`)
    trajectory: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

fn build_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::default();
    if let Some(path) = &args.config {
        config.apply_file(path)?;
    }
    if let Some(preset) = &args.preset {
        config.apply_preset(preset)?;
    }
    if let Some(v) = args.y0 {
        config.y0 = v;
    }
    if let Some(v) = args.m0 {
        config.m0 = v;
    }
    if let Some(v) = args.p {
        config.p = v;
    }
    if let Some(v) = args.theta {
        config.theta = v;
    }
    if let Some(v) = args.rho {
        config.rho = v;
    }
    if let Some(v) = args.cutoff {
        config.cutoff = v;
    }
    if let Some(v) = args.l0 {
        config.l0 = v;
    }
    if let Some(v) = args.beta {
        config.beta = v;
    }
    if let Some(v) = args.s {
        config.s = v;
    }
    if let Some(v) = args.delta {
        config.delta = v;
    }
    if let Some(h) = &args.horizon {
        let (start, end) = h.split_once(':').ok_or_else(|| {
            CliError::Config(format!("bad horizon '{h}', expected START:END"))
        })?;
        config.horizon.start = start
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("bad horizon start '{start}'")))?;
        config.horizon.end = end
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("bad horizon end '{end}'")))?;
    }
    if let Some(mode) = &args.mode {
        config.mode =
            parse_mode(mode).ok_or_else(|| CliError::Config(format!("bad mode '{mode}'")))?;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = &args.population {
        config.population = v.clone();
    }
    if let Some(v) = &args.benchmark {
        config.benchmark = v.clone();
    }
    if let Some(v) = &args.out {
        config.out = v.clone();
    }
    if let Some(v) = args.runs {
        config.runs = v;
    }
    if let Some(v) = args.window {
        config.window = v;
    }
    if let Some(v) = args.threshold {
        config.threshold = v;
    }
    if let Some(q) = &args.quantity {
        config.quantity = parse_quantity(q)
            .ok_or_else(|| CliError::Config(format!("bad quantity '{q}', expected Y or M")))?;
    }
    if let Some(v) = args.cap {
        config.cap = Some(v);
    }
    if let Some(v) = args.grid {
        config.grid = v;
    }
    if let Some(v) = args.refine_iters {
        config.refine_iters = v;
    }
    if args.free_m0 {
        config.free_m0 = true;
    }
    if args.allow_divergence {
        config.allow_divergence = true;
    }
    if config.horizon.is_empty() {
        return Err(CliError::Config(format!(
            "empty horizon {}:{}",
            config.horizon.start, config.horizon.end
        )));
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(args) => commands::cmd_simulate(&build_config(args)?),
        Command::Calibrate(args) => commands::cmd_calibrate(&build_config(args)?),
        Command::Ensemble(args) => commands::cmd_ensemble(&build_config(args)?),
        Command::Analyze(args) => commands::cmd_analyze(&build_config(&args.run)?, &args.trajectory),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
