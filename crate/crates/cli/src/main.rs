mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use output::Failure;

#[derive(Parser, Debug)]
#[command(name = "susy-cdr", version, about = "Darboux partners of convection-diffusion-reaction equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check that a candidate solves a CDR equation.
    Verify(VerifyArgs),
    /// Build a partner equation and map a solution onto it.
    Partner(PartnerArgs),
    /// Build a shape-invariant hierarchy and sample every level.
    Hierarchy(HierarchyArgs),
    /// Integrate an entry numerically and compare with its closed form.
    Simulate(SimulateArgs),
    /// Darboux pairing of a similarity-reduced equation.
    Similarity(SimilarityArgs),
    /// List catalog entries.
    List,
}

#[derive(clap::Args, Debug)]
struct GridArgs {
    /// Points along x of the verification grid.
    #[arg(long)]
    nx: Option<usize>,
    /// Points along t of the verification grid.
    #[arg(long)]
    nt: Option<usize>,
}

#[derive(clap::Args, Debug)]
struct VerifyArgs {
    /// Catalog entry to verify.
    #[arg(long, conflicts_with_all = ["equation", "solution"])]
    entry: Option<String>,
    /// Equation spec (JSON).
    #[arg(long, requires = "solution")]
    equation: Option<PathBuf>,
    /// Candidate solution.
    #[arg(long, requires = "equation")]
    solution: Option<String>,
    /// Multiply the candidate by (1 + eps x) before checking.
    #[arg(long, value_name = "EPS")]
    perturb: Option<f64>,
    /// Tolerance on the largest residual.
    #[arg(long)]
    tol: Option<f64>,
    /// Use the finite-difference residual instead of symbolic derivatives.
    #[arg(long)]
    numeric: bool,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CaseArg {
    A,
    B,
    C,
}

#[derive(clap::Args, Debug)]
struct PartnerArgs {
    #[arg(long, value_enum, ignore_case = true)]
    case: CaseArg,
    /// Catalog entry supplying the seed (hierarchy seat or Case C example).
    #[arg(long)]
    entry: Option<String>,
    /// Hierarchy level to construct from the entry.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Original prepotential.
    #[arg(long)]
    w0: Option<String>,
    /// Partner prepotential.
    #[arg(long)]
    w1: Option<String>,
    /// Solution of the original equation to map across.
    #[arg(long)]
    p0: Option<String>,
    /// Partner drift prepotential (Case C).
    #[arg(long)]
    omega1: Option<String>,
    /// Parameter binding NAME=VALUE; repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(clap::Args, Debug)]
struct HierarchyArgs {
    #[arg(long)]
    entry: String,
    #[arg(long)]
    depth: usize,
    /// Directory for per-level CSV files and the manifest.
    #[arg(long)]
    grid_out: Option<PathBuf>,
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Cn,
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BoundaryArg {
    Dirichlet,
    ZeroFlux,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ConvectionArg {
    Central,
    Upwind,
}

#[derive(clap::Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    entry: String,
    #[arg(long, default_value_t = 0.5)]
    t0: f64,
    #[arg(long, default_value_t = 1.0)]
    t1: f64,
    #[arg(long, default_value_t = 0.04)]
    h: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Left end of the box; defaults to -8 (0.1 on the half line).
    #[arg(long, allow_hyphen_values = true)]
    x_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x_max: Option<f64>,
    #[arg(long, value_enum, default_value = "cn")]
    scheme: SchemeArg,
    #[arg(long, value_enum, default_value = "dirichlet")]
    boundary: BoundaryArg,
    #[arg(long, value_enum, default_value = "central")]
    convection: ConvectionArg,
    /// Largest accepted relative L2 error.
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Also measure the convergence order over h, h/2, h/4.
    #[arg(long)]
    convergence: bool,
    /// Write the final field as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct SimilarityArgs {
    /// Similarity spec (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Write the lifted solution as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    tol: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Verify(a) => commands::verify(a),
        Command::Partner(a) => commands::partner(a),
        Command::Hierarchy(a) => commands::hierarchy(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Similarity(a) => commands::similarity(a),
        Command::List => commands::list(),
    };
    match result {
        Ok(outcome) => {
            output::emit(&outcome.report);
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::from(if outcome.pass { 0 } else { 1 })
        }
        Err(failure) => {
            let code = failure.exit_code();
            output::emit(&failure.to_json());
            eprintln!("error: {}", failure.message);
            ExitCode::from(code)
        }
    }
}

/// Shorthand used by the command handlers.
type CmdResult = Result<output::Outcome, Failure>;
