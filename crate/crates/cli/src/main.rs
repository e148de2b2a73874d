use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

mod commands;
mod output;

use commands::Failure;

/// Two-scale evaluation, independence, norm-constant and convergence tools
/// for compactly supported refinable functions.
#[derive(Parser, Debug)]
#[command(name = "refinekit", version)]
struct Cli {
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true, env = "REFINEKIT_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate Phi on a dyadic grid, or at one point with an enclosure.
    Eval(EvalArgs),
    /// Annihilation search and never-zero certificate for a coefficient vector.
    Independence(IndependenceArgs),
    /// Norm constants C_delta and B.
    Mz(MzArgs),
    /// Square function and maximal function of a projected test function.
    Converge(ConvergeArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
struct MaskArg {
    /// `builtin:NAME` (bspline1..32, daubechies1..5) or a mask TOML file.
    #[arg(long)]
    mask: String,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    mask: MaskArg,
    /// Grid `k / 2^r` for `k = 0..=2^r`.
    #[arg(long, default_value_t = 10, conflicts_with = "x")]
    resolution: u32,
    /// Single point in [0, 1].
    #[arg(long, allow_negative_numbers = true)]
    x: Option<f64>,
    /// Enclosure width for `--x`.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Digit cap for `--x`.
    #[arg(long, default_value_t = refinekit::eval::DEFAULT_DEPTH_CAP)]
    depth_cap: u32,
    /// Rational arithmetic (rational masks only; grid mode only).
    #[arg(long)]
    exact: bool,
    /// Output file (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct IndependenceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    mask: MaskArg,
    /// Coefficients, comma separated; `a/b` forms keep exact arithmetic.
    #[arg(long, allow_hyphen_values = true)]
    c: String,
    #[arg(long, default_value_t = 16)]
    depth: u32,
    /// Finest resolution for zero-set measures.
    #[arg(long, default_value_t = 12)]
    resolution: u32,
    /// Zero-set threshold on |c . Phi|.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Force floating arithmetic.
    #[arg(long)]
    float: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct MzArgs {
    #[command(flatten)]
    #[serde(flatten)]
    mask: MaskArg,
    /// Measures delta in (0, 1], comma separated.
    #[arg(long, default_value = "0.5")]
    delta: String,
    #[arg(long, default_value = "l1")]
    norm: String,
    #[arg(long, default_value_t = 12)]
    resolution: u32,
    #[arg(long, default_value_t = refinekit::mz::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = refinekit::mz::DEFAULT_STARTS)]
    starts: usize,
    #[arg(long, default_value_t = refinekit::mz::DEFAULT_ITERATIONS)]
    iterations: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ConvergeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    mask: MaskArg,
    /// Test function: jump:c, tent:c, sin:k or poly:a0,a1,...
    #[arg(long, allow_hyphen_values = true)]
    f: String,
    /// Top level J.
    #[arg(long, default_value_t = 8)]
    levels: u32,
    /// Thresholds M for the set comparison, comma separated.
    #[arg(long, default_value = "")]
    thresholds: String,
    /// First level of the Cauchy-tail proxy (default J / 2).
    #[arg(long)]
    tail_start: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    tail_tol: f64,
    /// Quadrature resolution (default J + 6).
    #[arg(long)]
    quadrature_resolution: Option<u32>,
    /// Evaluation grid resolution on [0, 1] (default J + 2).
    #[arg(long)]
    eval_resolution: Option<u32>,
    /// Per-point CSV output.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// JSON report output (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("warning: could not set thread count: {e}");
        }
    }
    let result = match &cli.command {
        Command::Eval(a) => commands::eval(a),
        Command::Independence(a) => commands::independence(a),
        Command::Mz(a) => commands::mz(a),
        Command::Converge(a) => commands::converge(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(e)) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(Failure::Numeric(e)) => {
            eprintln!("numeric failure: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}
