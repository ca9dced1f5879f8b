//! `pspin`: phase diagrams, gap spectra and annealing runs for the p-spin
//! ferromagnet with antiferromagnetic fluctuations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pspin_core::meanfield::{InteractionOrder, InverseTemperature};

use crate::output::Format;

const SUBCOMMANDS: [&str; 6] = ["slice", "phase-diagram", "gap", "scaling", "anneal", "matrix-dump"];

#[derive(Parser)]
#[command(name = "pspin", version, about, args_override_self = true)]
struct Cli {
    /// `key = value` file supplying defaults for any long flag; flags given
    /// on the command line win.
    #[arg(long, global = true, env = "PSPIN_CONFIG", value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "PSPIN_THREADS")]
    threads: Option<usize>,
    /// Directory receiving relative output paths.
    #[arg(long, global = true, env = "PSPIN_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean-field solution and transitions along a constant-lambda slice.
    #[command(args_override_self = true)]
    Slice(SliceArgs),
    /// Zero-temperature phase diagram: cell table and boundary file.
    #[command(args_override_self = true)]
    PhaseDiagram(DiagramArgs),
    /// Lowest two levels and gap minima along a constant-lambda slice.
    #[command(args_override_self = true)]
    Gap(GapArgs),
    /// Size dependence of gap minima and its power/exponential fits.
    #[command(args_override_self = true)]
    Scaling(ScalingArgs),
    /// Schrodinger evolution along an annealing path.
    #[command(args_override_self = true)]
    Anneal(AnnealArgs),
    /// Matrix elements of H(s, lambda) in the maximal-spin sector.
    #[command(args_override_self = true)]
    MatrixDump(MatrixArgs),
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output file (relative paths land in the output directory).
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
struct SliceArgs {
    /// Interaction order: an integer >= 3 or `inf`.
    #[arg(long)]
    p: InteractionOrder,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    s_min: f64,
    /// Upper end of the slice; must stay below 1.
    #[arg(long, default_value_t = 0.999)]
    s_max: f64,
    #[arg(long, default_value_t = 1000)]
    s_points: usize,
    /// Inverse temperature, or `inf` for the ground state.
    #[arg(long, default_value = "inf")]
    beta: InverseTemperature,
    /// Ferromagnetic seeds as `mz,mx;mz,mx;...`.
    #[arg(long)]
    seeds: Option<String>,
    /// Magnetization jump separating first- from second-order points.
    #[arg(long, default_value_t = 1e-3)]
    jump_threshold: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct DiagramArgs {
    #[arg(long)]
    p: InteractionOrder,
    /// Grid points per axis.
    #[arg(long, default_value_t = 201)]
    resolution: usize,
    /// Grid points along s (overrides --resolution).
    #[arg(long)]
    s_points: Option<usize>,
    /// Grid points along lambda (overrides --resolution).
    #[arg(long)]
    lambda_points: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    s_min: f64,
    #[arg(long, default_value_t = 1.0)]
    s_max: f64,
    #[arg(long, default_value_t = 0.0)]
    lambda_min: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda_max: f64,
    /// Boundary file; defaults to `<output stem>-boundaries.json`.
    #[arg(long)]
    boundaries: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct GapArgs {
    #[arg(long)]
    p: u32,
    #[arg(long)]
    lambda: f64,
    /// Number of spins.
    #[arg(long = "N", value_name = "N")]
    spins: usize,
    /// Uniform base grid on [0, 1].
    #[arg(long, default_value_t = 2001)]
    s_points: usize,
    /// Skip the extra sampling of small-gap intervals.
    #[arg(long)]
    no_refine: bool,
    /// s-tolerance of the golden-section refinement of minima.
    #[arg(long, default_value_t = 1e-7)]
    refine_tol: f64,
    /// Gap below which minima belong to the small-gap window.
    #[arg(long, default_value_t = 0.1)]
    window_threshold: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct ScalingArgs {
    #[arg(long)]
    p: u32,
    #[arg(long)]
    lambda: f64,
    /// Sizes, e.g. `40:160:20` or `40,80,120`.
    #[arg(long = "N", value_name = "LIST")]
    sizes: String,
    /// `global`, `rightmost` or a 0-based ordinal counted from the left.
    #[arg(long, default_value = "global")]
    minimum: String,
    #[arg(long, value_enum, default_value = "both")]
    model: ModelChoice,
    #[arg(long, default_value_t = 2001)]
    s_points: usize,
    #[arg(long, default_value_t = 1e-7)]
    refine_tol: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum ModelChoice {
    Power,
    Exponential,
    Both,
}

#[derive(Args, Debug)]
struct AnnealArgs {
    #[arg(long)]
    p: u32,
    #[arg(long = "N", value_name = "N")]
    spins: usize,
    /// Total annealing time.
    #[arg(long)]
    tau: f64,
    /// Time step (default min(1e-2, tau/1e4)).
    #[arg(long)]
    dt: Option<f64>,
    /// Constant-lambda path: sweep s at this lambda, then go to (1, 1).
    #[arg(long, conflicts_with = "path")]
    lambda: Option<f64>,
    /// Where the constant-lambda sweep turns towards (1, 1).
    #[arg(long, default_value_t = 0.99)]
    s_turn: f64,
    /// Explicit path vertices `s,lambda;s,lambda;...` from s = 0 to (1, 1).
    #[arg(long)]
    path: Option<String>,
    /// Second constant-lambda path run alongside the first.
    #[arg(long, conflicts_with = "compare_path")]
    compare_lambda: Option<f64>,
    /// Second explicit path run alongside the first.
    #[arg(long)]
    compare_path: Option<String>,
    /// Record the instantaneous ground-state overlap every this many steps.
    #[arg(long)]
    record_every: Option<usize>,
    /// CSV file for the overlap series (needs --record-every).
    #[arg(long, requires = "record_every")]
    overlaps: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct MatrixArgs {
    #[arg(long)]
    p: u32,
    #[arg(long = "N", value_name = "N")]
    spins: usize,
    #[arg(long)]
    s: f64,
    #[arg(long)]
    lambda: f64,
    /// Write every element of the dense matrix instead of the stored band.
    #[arg(long)]
    dense: bool,
    #[command(flatten)]
    out: OutputArgs,
}

/// Failure with its exit status: 2 for invalid configuration, 3 for
/// numerical failure.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<pspin_core::Error> for Failure {
    fn from(e: pspin_core::Error) -> Self {
        if e.is_numerical() {
            Self::numerical(e.to_string())
        } else {
            Self::config(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::config(format!("cannot write output: {e}"))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::config("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::config(e.to_string()))?;
    }
    let dir = cli.out_dir.as_path();
    match cli.command {
        Command::Slice(a) => commands::slice(dir, a),
        Command::PhaseDiagram(a) => commands::phase_diagram(dir, a),
        Command::Gap(a) => commands::gap(dir, a),
        Command::Scaling(a) => commands::scaling(dir, a),
        Command::Anneal(a) => commands::anneal(dir, a),
        Command::MatrixDump(a) => commands::matrix_dump(dir, a),
    }
}

fn main() -> ExitCode {
    let args = match config::merge_config(std::env::args().collect(), &SUBCOMMANDS) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
