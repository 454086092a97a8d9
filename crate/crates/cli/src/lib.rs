//! Command-line front end for `fracheat-core`.
//!
//! Exit codes: 0 success, 1 scenario failure, 2 usage or domain error,
//! 3 numerical failure.

pub mod cache;
mod commands;
pub mod config;
pub mod criteria;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use fracheat_core::kernel::BuildMethod;
use fracheat_core::{Error, ModelParams};

pub use config::{preset, GridSpec, RunConfig, PRESET_NAMES};
pub use criteria::{checks, run_check, Check, CheckOutcome, Criterion, Measure};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SCENARIO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fracheat", version, about = "Space-time fractional heat equation laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub dim: Option<u32>,
    /// Lebesgue exponent (`inf` for the sup norm).
    #[arg(long)]
    pub p: Option<f64>,
    /// Times, comma separated or repeated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub t: Vec<f64>,
    /// Shipped configuration (AC1..AC13, paper-map).
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, value_parser = parse_method)]
    pub method: Option<BuildMethod>,
    #[arg(long)]
    pub quiet: bool,
}

fn parse_method(s: &str) -> Result<BuildMethod, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print E_α(−x) and its derivative.
    Ml {
        /// Arguments, comma separated or repeated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x: Vec<f64>,
        /// Evenly spaced arguments `LO,HI,N`.
        #[arg(long)]
        range: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Build the self-similar profile and write it with its constants.
    Profile {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate the mild solution at the configured times.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate the Riesz potential of the datum.
    Potential {
        #[command(flatten)]
        common: Common,
    },
    /// Run scenarios and acceptance criteria.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Print predicted decay rates and the critical-dimension table.
    Rates {
        #[command(flatten)]
        common: Common,
    },
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Numerical(_) | Error::Invariant(_) => EXIT_NUMERICAL,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

/// Merges `--preset`/`--config` with the individual flags.
pub fn resolve(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match (&common.preset, &common.config) {
        (Some(_), Some(_)) => return Err(Failure::usage("--preset and --config are exclusive")),
        (Some(name), None) => preset(name)?,
        (None, Some(path)) => RunConfig::load(path)?,
        (None, None) => RunConfig::default(),
    };
    if common.alpha.is_some() || common.s.is_some() || common.dim.is_some() {
        let base = cfg.params_or_default();
        cfg.params = Some(ModelParams::new(
            common.alpha.unwrap_or(base.alpha()),
            common.s.unwrap_or(base.s()),
            common.dim.unwrap_or(base.dim()),
        )?);
    }
    if let Some(m) = common.method {
        cfg.method = m;
    }
    if !common.t.is_empty() {
        cfg.times = common.t.clone();
    }
    if let Some(out) = &common.out {
        cfg.out = Some(out.clone());
    }
    if common.quiet {
        cfg.verbosity = 0;
    }
    Ok(cfg)
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match commands::dispatch(&cli.command) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("fracheat: {}", f.message);
            f.code
        }
    }
}
