//! Command-line driver for the `horton` crate.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use horton::stats::Generator;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "horton", version, about = "Horton-Strahler statistics of coalescent and level-set trees")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Global {
    /// Worker threads for replicate loops (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the h-system and report N_k, n_k, gamma_k and R.
    SolveHorton(SolveHorton),
    /// Tokunaga matrix T_ab from the h-system.
    SolveTokunaga(SolveTokunaga),
    /// Sample trees and report branch statistics, shapes or the trees.
    Simulate(Simulate),
    /// Pairwise chi-square tests between shape histograms.
    CompareShapes(CompareShapes),
    /// Kingman cluster counts against their deterministic limit.
    HydroCheck(HydroCheck),
    /// Horton-Strahler and Tokunaga counts of one tree.
    AnalyzeTree(AnalyzeTree),
    /// Order-and-mass Smoluchowski system for a collision kernel.
    SolveGeneral(SolveGeneral),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HSolverArgs {
    /// Grid cutoff: the geometric grid stops at x = 1 - eps.
    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,
    /// Relative local error tolerance.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Geometric grid intervals (even).
    #[arg(long, default_value_t = 20_000)]
    pub grid: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveHorton {
    /// Number of orders K.
    #[arg(long)]
    pub orders: usize,
    #[command(flatten)]
    pub solver: HSolverArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveTokunaga {
    /// Largest order b in T_ab.
    #[arg(long)]
    pub max_order: usize,
    #[command(flatten)]
    pub solver: HSolverArgs,
}

fn parse_generator(s: &str) -> Result<Generator, String> {
    s.parse().map_err(|e: horton::Error| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimulateOutput {
    /// Shapes when n <= 12, branch statistics otherwise.
    Auto,
    BranchStats,
    Shapes,
    Trees,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Simulate {
    /// kingman, whitenoise[-uniform01|-gaussian|-exponential] or fragmentation.
    #[arg(long, value_parser = parse_generator)]
    pub model: Generator,
    /// Leaves per tree.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub reps: usize,
    /// Base seed; a random one is drawn and reported when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = SimulateOutput::Auto)]
    pub output: SimulateOutput,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareShapes {
    /// Leaves per tree for sampled models.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub reps: usize,
    /// Base seed; model `i` in the list uses `seed + i`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Models to sample (repeatable or comma separated).
    #[arg(long = "model", value_parser = parse_generator, value_delimiter = ',')]
    pub models: Vec<Generator>,
    /// Shape histograms written by `simulate --output shapes` (repeatable).
    #[arg(long = "hist")]
    pub hists: Vec<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HydroCheck {
    /// Leaf counts, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [1024usize, 4096, 16384])]
    pub n_list: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    /// Horizon K of the L2[0, K] distances.
    #[arg(long, default_value_t = 10.0)]
    pub horizon: f64,
    /// Orders j compared against eta_j.
    #[arg(long, default_value_t = 4)]
    pub orders: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeTree {
    /// Tree in parenthesized form, `-` for standard input.
    #[arg(long = "in", conflicts_with = "series", required_unless_present = "series")]
    pub input: Option<PathBuf>,
    /// Series (one value per line); analyzes its level-set tree.
    #[arg(long)]
    pub series: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelName {
    Constant,
    Additive,
    Multiplicative,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveGeneral {
    #[arg(long, value_enum, conflicts_with = "kernel_table", required_unless_present = "kernel_table")]
    pub kernel: Option<KernelName>,
    /// Symmetric kernel table K(i, j), comma separated rows.
    #[arg(long)]
    pub kernel_table: Option<PathBuf>,
    /// Highest order J.
    #[arg(long)]
    pub max_order: usize,
    /// Mass truncation M.
    #[arg(long)]
    pub max_mass: usize,
    #[arg(long)]
    pub t_max: f64,
    #[arg(long, default_value_t = 400)]
    pub intervals: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Lost-mass fraction treated as out of tolerance.
    #[arg(long, default_value_t = 1e-3)]
    pub max_lost_mass: f64,
}

/// Process exit codes; 2 is left to argument errors.
mod exit {
    pub const FAILURE: u8 = 1;
    pub const INVALID_INPUT: u8 = 3;
    pub const SOLVER: u8 = 4;
    pub const ACCURACY: u8 = 5;
    pub const TEST_UNDEFINED: u8 = 6;
    pub const IO: u8 = 7;
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use horton::Error as E;
    if err.downcast_ref::<commands::OutOfTolerance>().is_some() {
        return exit::ACCURACY;
    }
    if let Some(e) = err.downcast_ref::<E>() {
        return match e {
            E::StructuralInvalid(_) | E::Consistency(_) | E::Domain(_) | E::Parse { .. } | E::DegenerateInput(_) => {
                exit::INVALID_INPUT
            }
            E::SolverFailure { .. } => exit::SOLVER,
            E::Accuracy(_) => exit::ACCURACY,
            E::TestUndefined(_) => exit::TEST_UNDEFINED,
        };
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return exit::IO;
    }
    exit::FAILURE
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::SolveHorton(a) => commands::solve_horton(g, a),
        Command::SolveTokunaga(a) => commands::solve_tokunaga(g, a),
        Command::Simulate(a) => commands::simulate(g, a),
        Command::CompareShapes(a) => commands::compare_shapes(g, a),
        Command::HydroCheck(a) => commands::hydro_check(g, a),
        Command::AnalyzeTree(a) => commands::analyze_tree(g, a),
        Command::SolveGeneral(a) => commands::solve_general(g, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match cli.global.threads {
        Some(0) => {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit::FAILURE);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
