//! Command-line harness for exponential sampling experiments.
//!
//! [`run`] parses arguments, executes one subcommand and returns the process
//! exit code: 0 when every check passes, 1 on a numerical mismatch or a
//! failed computation, 2 on usage or configuration errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod format;

pub use config::{ExperimentConfig, KernelDecl, SignalDecl};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}", match .line { Some(l) => format!("config line {l}: {message}"), None => format!("config: {message}") })]
    Config {
        line: Option<usize>,
        message: String,
    },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] expsamp_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "expsamp",
    version,
    about = "Exponential sampling series experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in kernel: combo, bspline2, bspline3, jackson.
    #[arg(long)]
    pub kernel: Option<String>,
    /// Built-in signal: worked-example, unit-step, log, linear.
    #[arg(long)]
    pub signal: Option<String>,
    /// Comma-separated sampling rates.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub w: Vec<f64>,
    /// Comma-separated evaluation points.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub t: Vec<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write CSV here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comparison tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    Uniform,
    Adversarial,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check partition of unity, moments, psi constancy and Mellin conditions.
    KernelCheck {
        #[command(flatten)]
        common: CommonArgs,
        /// Order of the absolute moment reported next to M_0.
        #[arg(long)]
        nu: Option<f64>,
        /// Grid size on [1, e] for the sup scans.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Reproduce one of the jump tables (t = 3/2, 7/2, 11/2).
    Table {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
        id: u8,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Emit plot points: 1 = kernel, 2/3 = signal and series for w = 5/10.
    Figure {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
        id: u8,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Series values at jump points against the predicted limits.
    Jump {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Aligned and half-offset sequences at a jump.
    Diverge {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        m_max: Option<i64>,
    },
    /// Empirical sup error against the rate bound.
    Rate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long)]
        t_grid: Option<usize>,
    },
    /// Perturbed samples f(e^{k/w}) - xi_k.
    Roundoff {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        xi: Option<f64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        t_grid: Option<usize>,
    },
    /// Jittered samples f(e^{k/w} + rho_k).
    Jitter {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        t_grid: Option<usize>,
    },
}

/// Parse `args` (program name first) and run the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{rendered}")
            } else {
                write!(stdout, "{rendered}")
            };
            return code;
        }
    };
    match commands::execute(&cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
