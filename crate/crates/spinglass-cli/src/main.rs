//! `spinglass` — one binary over the whole toolkit.
//!
//! Subcommands: `solve` runs any of the spectrum/ground-state solvers on an
//! Ising or QUBO coefficient file (optionally through a minor embedding onto
//! a hardware graph), `railway` compiles/solves/validates train-dispatching
//! problems, and `dynamics` runs the trajectory-as-QUBO pipeline.
//!
//! Conventions shared by every subcommand:
//!
//! * Results are JSON on stdout, or written to `--output` together with a
//!   `<output>.manifest.json` provenance record (command, input digests,
//!   resolved parameters, seed, wall time).
//! * Stochastic solvers require an explicit `--seed`; given the same inputs
//!   and seed, result files are byte-identical across runs and worker
//!   counts.  Wall time lives only in the manifest.
//! * Exit codes: 1 = a validation found violations, 2 = bad input or
//!   parameters, 3 = the problem exceeds a size limit, 4 = a solver failed
//!   on a well-formed problem.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "spinglass", version, about = "Spin-glass optimization toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an Ising or QUBO coefficient file.
    Solve(SolveArgs),
    /// Compile, solve, and validate railway dispatching problems.
    #[command(subcommand)]
    Railway(RailwayCommand),
    /// Encode a linear-dynamics trajectory as a QUBO and solve it.
    Dynamics(DynamicsArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Ising,
    Qubo,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum SolverKind {
    /// Exhaustive enumeration (small instances only).
    Naive,
    /// Chunked exhaustive scan, k lowest states, multi-threaded.
    Chunked,
    /// Gray-code ground-state search with suffix caching.
    Gray,
    /// Simulated annealing on a geometric ladder.
    Sa,
    /// Parallel tempering (replica exchange).
    Pt,
    /// Branch-and-bound over boundary-MPS cluster conditionals.
    Tn,
    /// Imaginary-time MPS branching on arbitrary graphs.
    Mps,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Naive => "naive",
            SolverKind::Chunked => "chunked",
            SolverKind::Gray => "gray",
            SolverKind::Sa => "sa",
            SolverKind::Pt => "pt",
            SolverKind::Tn => "tn",
            SolverKind::Mps => "mps",
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum FormatKind {
    Json,
    Text,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum StrategyKind {
    /// Drop samples whose chains disagree.
    Discard,
    /// Take the chain's majority spin; ties resolved by seeded coin flip.
    Majority,
}

#[derive(Args)]
pub struct SolveArgs {
    /// Instance file: `#` comments, header `N M`, then 1-based `i j value`
    /// coefficient lines (`i == j` are linear terms).
    pub instance: PathBuf,

    /// How to read the coefficients.
    #[arg(long, value_enum, default_value_t = ModelKind::Ising)]
    pub model: ModelKind,

    #[arg(long, value_enum, default_value_t = SolverKind::Naive)]
    pub solver: SolverKind,

    /// Number of lowest-energy states to report.
    #[arg(long, default_value_t = 1)]
    pub k: usize,

    /// Chunk exponent m for the chunked scan; defaults to min(16, n).
    #[arg(long)]
    pub chunk_exp: Option<u32>,

    /// Gray-code suffix cache depth; defaults to min(8, n - chunk_exp).
    #[arg(long)]
    pub cache_depth: Option<u32>,

    /// Gray solver: split into 2^FIX subproblems by fixing the
    /// highest-index variables.
    #[arg(long, default_value_t = 0)]
    pub fix: u32,

    /// Worker threads for the scan solvers (0 = one per core).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,

    /// RNG seed; required by the stochastic solvers (sa, pt).
    #[arg(long)]
    pub seed: Option<u64>,

    /// Monte Carlo sweeps per run.
    #[arg(long, default_value_t = 1000)]
    pub sweeps: usize,

    /// Independent annealing restarts (sa only).
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,

    /// Ladder length (sa) or replica count (pt).
    #[arg(long, default_value_t = 32)]
    pub replicas: usize,

    /// Smallest inverse temperature of the geometric ladder.
    #[arg(long, default_value_t = 0.1)]
    pub beta_min: f64,

    /// Largest inverse temperature of the geometric ladder.
    #[arg(long, default_value_t = 10.0)]
    pub beta_max: f64,

    /// Inverse temperature for tn (default 3) and mps (default 1).
    #[arg(long)]
    pub beta: Option<f64>,

    /// Boundary-MPS bond dimension for the tn solver (default 16).
    #[arg(long)]
    pub chi: Option<usize>,

    /// Truncation cutoff: relative discarded probability for tn
    /// (default 1e-3), relative marginal weight for mps (default 1e-6).
    #[arg(long)]
    pub cutoff: Option<f64>,

    /// MPS bond dimension for the mps solver (default 16).
    #[arg(long)]
    pub bond: Option<usize>,

    /// Imaginary-time step for the mps solver (default 0.25).
    #[arg(long)]
    pub dbeta: Option<f64>,

    /// Cluster map file assigning spins to lattice sites (tn only).
    #[arg(long)]
    pub cluster_map: Option<PathBuf>,

    /// Hardware graph edge list; enables the embedding route.
    #[arg(long, requires = "embedding")]
    pub graph: Option<PathBuf>,

    /// Embedding JSON mapping logical variables to qubit chains.
    #[arg(long, requires = "graph")]
    pub embedding: Option<PathBuf>,

    /// Chain-strength scale: penalty is css * max |J| of the logical
    /// instance (css itself when there are no couplings).
    #[arg(long, default_value_t = 1.0)]
    pub css: f64,

    /// Broken-chain resolution strategy for embedded runs.
    #[arg(long, value_enum, default_value_t = StrategyKind::Majority)]
    pub strategy: StrategyKind,

    #[arg(long, value_enum, default_value_t = FormatKind::Json)]
    pub format: FormatKind,

    /// Write the result here (plus `<output>.manifest.json`) instead of
    /// printing to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum RailwayCommand {
    /// Compile a dispatching problem to a QUBO file and a variable map.
    Compile(RailCompileArgs),
    /// Solve a dispatching problem, decode the schedule, and validate it.
    Solve(RailSolveArgs),
    /// Check a delay table against the problem's feasibility conditions.
    Validate(RailValidateArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    /// Exact enumeration restricted to one-hot assignments.
    Onehot,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum RailSolverKind {
    /// Simulated annealing on the assembled QUBO.
    Sa,
}

#[derive(Args)]
pub struct RailCompileArgs {
    /// Dispatching problem (JSON).
    pub problem: PathBuf,

    /// Override the prohibited-pair penalty weight.
    #[arg(long)]
    pub p_pair: Option<f64>,

    /// Override the one-hot penalty weight.
    #[arg(long)]
    pub p_sum: Option<f64>,

    /// Override every train's maximum secondary delay.
    #[arg(long)]
    pub dmax: Option<u32>,

    /// QUBO output path; the variable map is written to
    /// `<output>.map.json` and the manifest to `<output>.manifest.json`.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct RailSolveArgs {
    /// Dispatching problem (JSON).
    pub problem: PathBuf,

    /// Exact reference solver (default when no --solver is given).
    #[arg(long, value_enum, conflicts_with = "solver")]
    pub oracle: Option<OracleKind>,

    /// Stochastic solver over the assembled QUBO; requires --seed.
    #[arg(long, value_enum)]
    pub solver: Option<RailSolverKind>,

    /// Number of lowest-energy assignments to consider (oracle only).
    #[arg(long, default_value_t = 1)]
    pub k: usize,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, default_value_t = 1000)]
    pub sweeps: usize,

    #[arg(long, default_value_t = 10)]
    pub restarts: usize,

    #[arg(long, default_value_t = 32)]
    pub replicas: usize,

    #[arg(long, default_value_t = 0.1)]
    pub beta_min: f64,

    #[arg(long, default_value_t = 10.0)]
    pub beta_max: f64,

    /// Override the prohibited-pair penalty weight.
    #[arg(long)]
    pub p_pair: Option<f64>,

    /// Override the one-hot penalty weight.
    #[arg(long)]
    pub p_sum: Option<f64>,

    /// Override every train's maximum secondary delay.
    #[arg(long)]
    pub dmax: Option<u32>,

    #[arg(long, value_enum, default_value_t = FormatKind::Json)]
    pub format: FormatKind,

    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct RailValidateArgs {
    /// Dispatching problem (JSON).
    pub problem: PathBuf,

    /// Delay table (JSON: `{"delays": [[...], ...]}`, one row per train).
    #[arg(long)]
    pub table: PathBuf,

    #[arg(long, value_enum, default_value_t = FormatKind::Json)]
    pub format: FormatKind,

    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum DynSolverKind {
    /// Exhaustive scan of the encoded QUBO (exact).
    Exact,
    /// Simulated annealing; requires --seed.
    Sa,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveKind {
    /// Minimize the squared residual of the clock system (always valid).
    LeastSquares,
    /// Minimize the natural quadratic energy (positive definite systems).
    Energy,
}

#[derive(Args)]
pub struct DynamicsArgs {
    /// System specification (JSON): dimension, generator, initial state,
    /// grid size, and fixed-point code.
    pub spec: PathBuf,

    #[arg(long, value_enum, default_value_t = DynSolverKind::Exact)]
    pub solver: DynSolverKind,

    #[arg(long, value_enum, default_value_t = ObjectiveKind::LeastSquares)]
    pub objective: ObjectiveKind,

    /// Truncate encoded coefficients to this many decimal digits before
    /// solving.
    #[arg(long)]
    pub truncate: Option<u32>,

    /// Propagator substeps per interval (time-dependent generators only).
    #[arg(long, default_value_t = 16)]
    pub substeps: usize,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, default_value_t = 1000)]
    pub sweeps: usize,

    #[arg(long, default_value_t = 10)]
    pub restarts: usize,

    #[arg(long, value_enum, default_value_t = FormatKind::Json)]
    pub format: FormatKind,

    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve(args) => commands::solve::run(args),
        Command::Railway(RailwayCommand::Compile(args)) => commands::railway::compile(args),
        Command::Railway(RailwayCommand::Solve(args)) => commands::railway::solve(args),
        Command::Railway(RailwayCommand::Validate(args)) => commands::railway::validate(args),
        Command::Dynamics(args) => commands::dynamics::run(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
