//! `synclift` — command-line driver for the rounding and correlation toolkit.
//!
//! Subcommands:
//!
//! * `verify-bound` — random positive contractions across dimensions and
//!   states, checking the certified rounding bound on every draw.
//! * `round` — round a representation-shaped tuple file (or a whole
//!   sequence file) into exact PVMs, emitting defect reports.
//! * `correlate` — extract the two-moment correlation table of a
//!   representation under a tracial state.
//! * `pipeline` — lift a sequence indexwise and track table distances to a
//!   target.
//! * `game` — evaluate a game on a table, brute-force the classical
//!   synchronous value, or run the seesaw optimizer.
//!
//! Exit codes: 0 success, 2 validation/property failure, 64 usage error,
//! 65 malformed input. Primary outputs are byte-identical across reruns with
//! the same inputs and seed; they are written atomically (temp file plus
//! rename). `SYNC_LIFT_THREADS` caps internal parallelism.

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Debug, Parser)]
#[command(name = "synclift", version, about = "PVM rounding and synchronous correlation toolkit")]
struct Cli {
    #[command(flatten)]
    run: RunConfig,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Args, Clone)]
struct RunConfig {
    /// Root seed for anything randomized.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory for generated files.
    #[arg(long, global = true, default_value = ".")]
    out: std::path::PathBuf,
    /// Report format for flat exports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Tolerance overrides.
    #[arg(long = "tol.herm", global = true, value_name = "T")]
    tol_herm: Option<f64>,
    #[arg(long = "tol.eig", global = true, value_name = "T")]
    tol_eig: Option<f64>,
    #[arg(long = "tol.proj", global = true, value_name = "T")]
    tol_proj: Option<f64>,
    #[arg(long = "tol.pos", global = true, value_name = "T")]
    tol_pos: Option<f64>,
    #[arg(long = "tol.psd", global = true, value_name = "T")]
    tol_psd: Option<f64>,
    #[arg(long = "tol.trace", global = true, value_name = "T")]
    tol_trace: Option<f64>,
    #[arg(long = "tol.thresh", global = true, value_name = "T")]
    tol_thresh: Option<f64>,
    #[arg(long = "tol.corr", global = true, value_name = "T")]
    tol_corr: Option<f64>,
    #[arg(long = "tol.imag", global = true, value_name = "T")]
    tol_imag: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the certified rounding bound on seeded random contractions.
    VerifyBound {
        /// Number of random contractions to draw.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Dimensions to cycle through: a comma list (1,2,8) or range (1..16).
        #[arg(long, default_value = "1,2,3,4,8,16")]
        dims: String,
        /// Random faithful states per trial, on top of the normalized trace.
        #[arg(long, default_value_t = 5)]
        states: usize,
    },
    /// Round a tuple file (rep-shaped or sequence) into exact PVMs.
    Round {
        /// Input file: rep-shaped tuples or an index sequence.
        input: std::path::PathBuf,
        /// What to do with the last element per tuple.
        #[arg(long, value_enum, default_value_t = ModeArg::PadLast)]
        mode: ModeArg,
        /// Density matrix file for the reporting state (default: normalized
        /// trace).
        #[arg(long)]
        density: Option<std::path::PathBuf>,
    },
    /// Extract the correlation table of a representation under a trace.
    Correlate {
        /// Representation file.
        rep: std::path::PathBuf,
        /// Tracial state file.
        trace: std::path::PathBuf,
    },
    /// Lift a sequence indexwise and measure distances to a target table.
    Pipeline {
        /// Sequence file.
        sequence: std::path::PathBuf,
        /// Target correlation table file.
        target: std::path::PathBuf,
        /// Table distance to report.
        #[arg(long, value_enum, default_value_t = MetricArg::Sup)]
        metric: MetricArg,
    },
    /// Evaluate or optimize a synchronous game.
    Game {
        /// Game file.
        game: std::path::PathBuf,
        #[command(subcommand)]
        action: GameAction,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    PadLast,
    ReportOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Sup,
    L1,
}

#[derive(Debug, Subcommand)]
enum GameAction {
    /// Value of the game on a correlation table.
    Value {
        #[arg(long)]
        table: std::path::PathBuf,
    },
    /// Brute-force maximum over deterministic synchronous strategies.
    Classical,
    /// Local seesaw ascent over fixed-dimension representations.
    Seesaw {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 200)]
        iters: usize,
    },
}

fn configure_threads() {
    if let Ok(raw) = std::env::var("SYNC_LIFT_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            if n >= 1 {
                // The pool can only be set once per process; a failed rebuild
                // is fine.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("{e}");
            return ExitCode::from(64);
        }
    };
    configure_threads();
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
