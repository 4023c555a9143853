//! `rabi`: spectral solvers of the quantum Rabi model on the command line.
//!
//! Every subcommand validates its flags, runs one solver, and writes one or
//! more versioned tables to standard output or `--out`.

use std::ffi::OsString;
use std::io::Write;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use rabi_core::RabiError;
use thiserror::Error;

mod commands;
pub mod table;

pub use table::{Cell, Format, Table};

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "RABI_THREADS";

const FIGURES: &str = "\
Reproduction recipes:
  spectral functions G+ and G- over x in [-1, 5]:
      rabi gscan --g 0.7 --delta 0.4 --xmin -1 --xmax 5 --steps 600
  Rabi spectral graph (two ladders):
      rabi sweep --model rabi --delta 0.4 --gmin 0.01 --gmax 0.8 --points 80 --levels 8
  Jaynes-Cummings spectral graph (accidental crossings):
      rabi sweep --model jc --delta 0.4 --gmin 0.01 --gmax 0.8 --points 80 --cmax 6
  broken-parity spectral graph (no crossings):
      rabi sweep --model eps --delta 0.7 --eps 0.2 --gmin 0.01 --gmax 1 --points 80 --levels 8

Exit codes: 0 ok, 2 usage, 3 numeric failure, 4 no convergence.
Worker threads: RABI_THREADS (default: all cores).";

#[derive(Debug, Parser)]
#[command(name = "rabi", version, about = "Exact spectra of the quantum Rabi model", after_help = FIGURES)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,

    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 0.7)]
    pub g: f64,
    #[arg(long, default_value_t = 0.4, allow_hyphen_values = true)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    Rabi,
    Jc,
    Eps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleModel {
    Rabi,
    RabiEps,
    Jc,
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RouteArg {
    Phi2,
    Phi1,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// G+ and G- on a grid of x = E + g²/ω, with pole context.
    Gscan {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        xmin: f64,
        #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
        xmax: f64,
        #[arg(long, default_value_t = 600)]
        steps: usize,
    },
    /// Eigenvalues below x = xmax, checked against the truncated oracle.
    Spectrum {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
        xmax: f64,
        /// Lower end of the scan (broken-parity model only).
        #[arg(long, allow_hyphen_values = true)]
        xmin: Option<f64>,
    },
    /// Couplings where baseline n carries a doubly degenerate level.
    Exceptional {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[arg(long, default_value_t = 0.4, allow_hyphen_values = true)]
        delta: f64,
        #[arg(long, default_value_t = 0.0)]
        gmin: f64,
        #[arg(long, default_value_t = 2.0)]
        gmax: f64,
    },
    /// Levels tracked over a coupling grid, crossings and ladder verdict.
    Sweep {
        #[arg(long, value_enum, default_value = "rabi")]
        model: SweepKind,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[arg(long, allow_hyphen_values = true)]
        delta: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        gmin: f64,
        #[arg(long)]
        gmax: Option<f64>,
        #[arg(long, default_value_t = 80)]
        points: usize,
        /// Levels per sector (Rabi, broken parity).
        #[arg(long, default_value_t = 8)]
        levels: usize,
        /// Largest excitation number (Jaynes-Cummings).
        #[arg(long, default_value_t = 6)]
        cmax: u32,
        /// Crossing threshold in units of ω.
        #[arg(long, default_value_t = 1e-6)]
        threshold: f64,
    },
    /// Bargmann series and Fock amplitudes of one regular eigenstate.
    Wavefunction {
        #[command(flatten)]
        model: ModelArgs,
        /// Position in the energy-ordered spectrum.
        #[arg(long, default_value_t = 0)]
        state: usize,
        #[arg(long, value_enum, default_value = "phi2")]
        route: RouteArg,
        /// Fixed Taylor order instead of the adaptive cut.
        #[arg(long)]
        order: Option<usize>,
        /// Fock truncation of the oracle comparison.
        #[arg(long, default_value_t = 80)]
        ntr: usize,
    },
    /// Truncated Fock-space diagonalization.
    Oracle {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value = "rabi")]
        matrix: OracleModel,
        #[arg(long, default_value_t = 10)]
        levels: usize,
        /// Fixed truncation; by default the truncation grows until converged.
        #[arg(long)]
        ntr: Option<usize>,
    },
    /// Minimal-solution residual f_0 - V_1 next to G±, and the cutoff demo.
    Schweber {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        xmin: f64,
        #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
        xmax: f64,
        #[arg(long, default_value_t = 600)]
        steps: usize,
        /// Point of the continued-fraction cutoff table (ω = 1 units).
        #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
        xcf: f64,
    },
    /// Closed-form Jaynes-Cummings levels.
    Jc {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 6)]
        cmax: u32,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] RabiError),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Core(e) => core_code(e),
        }
    }
}

fn core_code(e: &RabiError) -> i32 {
    match e {
        RabiError::InvalidParams(_) => 2,
        RabiError::NoConvergence { .. } | RabiError::NearZeroDenominator { .. } => 4,
        RabiError::AtCoupling { source, .. } => core_code(source),
        _ => 3,
    }
}

/// Runs one invocation; `args` includes the program name. Tables go to `out`
/// (or `--out`), diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let _ = write!(err, "{text}");
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => {
                    if !text.contains("Usage:") {
                        let _ = writeln!(err, "\n{}", Cli::command().render_usage());
                    }
                    2
                }
            };
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Computes the tables of one parsed invocation.
pub fn tables(cli: &Cli) -> Result<Vec<Table>, CliError> {
    commands::dispatch(&cli.command)
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let tables = tables(cli)?;
    let mut file;
    let sink: &mut dyn Write = match &cli.out {
        Some(path) => {
            file = std::io::BufWriter::new(std::fs::File::create(path)?);
            &mut file
        }
        None => out,
    };
    match cli.format {
        Format::Csv => table::write_csv(&tables, sink)?,
        Format::Json => table::write_json(&tables, sink)?,
    }
    sink.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_class() {
        let no_conv = RabiError::NoConvergence {
            what: "x",
            iterations: 1,
        };
        assert_eq!(CliError::from(no_conv.clone()).exit_code(), 4);
        let nested = RabiError::AtCoupling {
            g: 0.1,
            source: Box::new(no_conv),
        };
        assert_eq!(CliError::from(nested).exit_code(), 4);
        assert_eq!(CliError::from(RabiError::SingularCoupling).exit_code(), 3);
        assert_eq!(CliError::from(RabiError::InvalidParams("x".into())).exit_code(), 2);
    }
}
