//! Command-line front end: seeded simulation runs, limit solves,
//! cross-comparisons, and the acceptance battery, with reproducible
//! per-run output directories.
//!
//! Exit codes: 0 success, 1 validation or I/O error, 2 numerical failure,
//! 3 acceptance failure.

mod cmds;
mod compare;
mod manifest;
mod profile;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "averaging",
    version,
    about = "Averaging-process simulators, limit solvers, and verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Event-driven run(s) on the complete graph; writes snapshots.csv,
    /// xj.csv, and manifest.json.
    Simulate(SimulateArgs),
    /// Averaging process on the discrete torus with a spectral heat
    /// reference; writes torus.csv, pairing.csv, and manifest.json.
    SimulateTorus(TorusArgs),
    /// Density-equation solve; writes density.csv, moments.csv, grid.json,
    /// and manifest.json.
    SolvePde(SolvePdeArgs),
    /// Dyadic atomic-measure solve; writes atoms.csv and manifest.json.
    SolveAtoms(SolveAtomsArgs),
    /// Compare a simulation run against a solver run (or two solver runs);
    /// writes report.csv.
    Compare(CompareArgs),
    /// Run the acceptance battery and print one line per criterion.
    Verify(VerifyArgs),
}

/// Flags shared by every run-producing subcommand.
#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// Optional TOML config file; command-line flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Exact output directory (created if missing). Defaults to
    /// `<root>/<id>_<unix-time>` under `--out-root`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Root for auto-named run directories; env `AVERAGING_OUT_ROOT`
    /// overrides the built-in default `runs`.
    #[arg(long)]
    out_root: Option<PathBuf>,
    /// Experiment id used in the auto-generated directory name.
    #[arg(long)]
    id: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct SimulateArgs {
    #[command(flatten)]
    output: OutputArgs,
    /// Number of vertices.
    #[arg(long)]
    n: Option<usize>,
    /// Time horizon.
    #[arg(long)]
    t: Option<f64>,
    /// Initial distribution, e.g. `ber:0.5`, `linear2x`, `uniform:-1,1`.
    #[arg(long)]
    dist: Option<String>,
    /// Base seed; replica r uses stream id r.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of independent replicas.
    #[arg(long)]
    replicas: Option<u64>,
    /// Comma-separated snapshot times; defaults to the horizon only.
    #[arg(long)]
    snapshots: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct TorusArgs {
    #[command(flatten)]
    output: OutputArgs,
    /// Lattice dimension (1 or 2 for production runs).
    #[arg(long)]
    d: Option<usize>,
    /// Side length N of the torus.
    #[arg(long)]
    n: Option<usize>,
    /// Initial profile: `sin1` / `sin:k` / `cos:k` / `const:c`.
    #[arg(long)]
    profile: Option<String>,
    /// Test profile for the pairing CSV; defaults to the initial profile.
    #[arg(long)]
    test_fn: Option<String>,
    /// Time horizon.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<u64>,
    /// Comma-separated snapshot times; defaults to the horizon only.
    #[arg(long)]
    snapshots: Option<String>,
    /// Also write per-site torus.csv rows (large); pairing.csv is always
    /// written.
    #[arg(long)]
    sites: bool,
}

#[derive(Args, Debug, Clone)]
struct SolvePdeArgs {
    #[command(flatten)]
    output: OutputArgs,
    /// Initial density, e.g. `linear2x`, `uniform:-1,1`, `cauchy:1`.
    #[arg(long)]
    dist: Option<String>,
    /// Grid half-width L (domain [-L, L]).
    #[arg(long)]
    l: Option<f64>,
    /// Number of grid cells (even).
    #[arg(long)]
    n: Option<usize>,
    /// RK4 time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Time horizon.
    #[arg(long)]
    t: Option<f64>,
    /// Comma-separated snapshot times; defaults to the horizon only.
    #[arg(long)]
    snapshots: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct SolveAtomsArgs {
    #[command(flatten)]
    output: OutputArgs,
    /// Initial atoms: `ber:p` or `point:c`.
    #[arg(long)]
    dist: Option<String>,
    /// Dyadic level J (atoms at k / 2^J).
    #[arg(long)]
    j: Option<u32>,
    /// RK4 time step (at most 1e-3).
    #[arg(long)]
    dt: Option<f64>,
    /// Time horizon.
    #[arg(long)]
    t: Option<f64>,
    /// Comma-separated snapshot times; defaults to the horizon only.
    #[arg(long)]
    snapshots: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct CompareArgs {
    #[command(flatten)]
    output: OutputArgs,
    /// Run directory holding simulation snapshots.csv (or a solver run).
    #[arg(long)]
    sim: Option<PathBuf>,
    /// Run directory holding the reference (density.csv, atoms.csv, or
    /// snapshots.csv).
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Wasserstein-1 tolerance per snapshot.
    #[arg(long)]
    w1_tol: Option<f64>,
    /// Absolute tolerance on mean and variance differences.
    #[arg(long)]
    moment_tol: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct VerifyArgs {
    /// Trimmed battery (smaller grid, fewer replicas).
    #[arg(long, conflicts_with = "full")]
    quick: bool,
    /// Full battery at the stated sizes (default).
    #[arg(long)]
    full: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => cmds::simulate(args),
        Command::SimulateTorus(args) => cmds::simulate_torus(args),
        Command::SolvePde(args) => cmds::solve_pde(args),
        Command::SolveAtoms(args) => cmds::solve_atoms(args),
        Command::Compare(args) => compare::run(args),
        Command::Verify(args) => cmds::verify(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_class(&e))
        }
    }
}

/// Exit code 2 for numerical failures, 1 for everything else.
fn exit_class(e: &averaging::Error) -> u8 {
    use averaging::Error::*;
    match e {
        Instability { .. } | InvalidTimeStep { .. } | UndefinedMoment(_) | SizeCap { .. } => 2,
        _ => 1,
    }
}
