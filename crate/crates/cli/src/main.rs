//! `gridfn`: run the experiment catalog, list it, or solve an ad-hoc Poisson
//! problem on the unit box.
//!
//! Exit status is 0 when every check passes, 1 when a check or an experiment
//! fails and 2 on usage or configuration errors.

mod config;
mod output;
mod solve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gridfn::experiments::{self, Ramp};
use gridfn::pde::SolveMethod;

use config::{load_run_config, ConfigError};

#[derive(Parser, Debug)]
#[command(name = "gridfn", version, about = "Grid-function calculus experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one or more experiments and report their checks.
    Run(RunArgs),
    /// List the experiment catalog.
    List(ListArgs),
    /// Solve −Δu = f on the unit box with zero boundary values.
    Solve(solve::SolveArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Default)]
pub struct RunArgs {
    /// Experiment name; repeat to run several.
    #[arg(long = "experiment", short = 'e')]
    pub experiments: Vec<String>,
    /// Run the whole catalog.
    #[arg(long, conflicts_with = "experiments")]
    pub all: bool,
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for tables and reports.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Format of the tables written under --out.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Print a machine-readable summary on stdout.
    #[arg(long)]
    pub json: bool,
    /// Number of ladder levels.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Coarsest N (per axis in 2D).
    #[arg(long)]
    pub base: Option<u64>,
    /// Window half-width L.
    #[arg(long)]
    pub window: Option<f64>,
    /// Seed for the test-function battery.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative residual tolerance for linear solves.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Test functions per battery.
    #[arg(long)]
    pub battery_count: Option<usize>,
    /// Bump radii as fractions of the box side, `min,max`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub radii: Option<Vec<f64>>,
    /// Width of the measure windows in grid steps.
    #[arg(long)]
    pub window_steps: Option<u64>,
    /// Histogram bins per value measure.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Values beyond this magnitude count as escaped mass.
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Linear solver.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Time step of the heat experiment.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Final time of the heat experiment.
    #[arg(long)]
    pub final_time: Option<f64>,
    /// Exponent m in ⟨h^m − h^n, Δh⟩.
    #[arg(long)]
    pub m: Option<u32>,
    /// Exponent n in ⟨h^m − h^n, Δh⟩.
    #[arg(long)]
    pub n: Option<u32>,
    /// Ramp profile of the steep Heaviside approximation.
    #[arg(long, value_enum)]
    pub ramp: Option<RampArg>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Direct,
    Cg,
    Auto,
}

impl From<MethodArg> for SolveMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Direct => SolveMethod::Direct,
            MethodArg::Cg => SolveMethod::Cg,
            MethodArg::Auto => SolveMethod::Auto,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum RampArg {
    Linear,
    Smoothstep,
    Quadratic,
}

impl From<RampArg> for Ramp {
    fn from(r: RampArg) -> Self {
        match r {
            RampArg::Linear => Ramp::Linear,
            RampArg::Smoothstep => Ramp::Smoothstep,
            RampArg::Quadratic => Ramp::Quadratic,
        }
    }
}

#[derive(Args, Debug)]
struct ListArgs {
    /// Print the catalog as JSON.
    #[arg(long)]
    json: bool,
    /// Keep entries whose name, description or tags contain this text.
    #[arg(long)]
    filter: Option<String>,
}

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }
    match cli.command {
        Command::List(args) => list(&args),
        Command::Run(args) => run(&args),
        Command::Solve(args) => solve::run(&args),
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("GRIDFN_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("GRIDFN_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| e.to_string())
}

fn list(args: &ListArgs) -> ExitCode {
    let entries = match &args.filter {
        Some(f) => experiments::filter_catalog(f),
        None => experiments::catalog(),
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&entries).expect("catalog serializes"));
    } else {
        let width = entries.iter().map(|e| e.name.len()).max().unwrap_or(0);
        for e in &entries {
            println!("{:width$}  {}", e.name, e.description);
            println!("{:width$}  reproduces: {}", "", e.reproduces);
        }
    }
    ExitCode::SUCCESS
}

fn run(args: &RunArgs) -> ExitCode {
    let rc = match load_run_config(args) {
        Ok(rc) => rc,
        Err(ConfigError(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let outcomes = output::execute(&rc);
    match output::emit(&rc, &outcomes, args.json) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}
