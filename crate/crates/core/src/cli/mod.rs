//! Command-line front end.
//!
//! Exit codes: `0` success with every certificate passing, `2` success with
//! certificate or trend warnings, `1` solver failure, `64` invalid input.
//! `FLAMEFRONT_THREADS` caps the size of the worker pool.

mod commands;
pub mod medium_file;
pub mod output;

use crate::error::Error;
use crate::front::FrontConfig;
use crate::homog::{CurveConfig, Lambda, MuRule, SweepConfig};
use crate::wave::FixedPointConfig;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::path::PathBuf;

pub use output::RunManifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_WARNINGS: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "flamefront",
    version,
    about = "Travelling flame fronts in striated media and their homogenized limits"
)]
#[command(args_conflicts_with_subcommands = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Medium description (TOML)
    #[arg(long)]
    pub medium: PathBuf,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Residual tolerance of the front and fixed-point solvers
    #[arg(long, default_value_t = 1e-9, allow_negative_numbers = true)]
    pub tol: f64,
    /// Front steps per period (speed-curve, corrector) or temperature cells per period (wave, homogenize)
    #[arg(long)]
    pub grid: Option<usize>,
    /// Also write gnuplot-ready .dat files
    #[arg(long)]
    pub dat: bool,
    /// Evaluate independent entries on the calling thread only
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Fixed,
    Linear,
    Custom,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for a travelling wave (c, v, u)
    Wave {
        #[command(flatten)]
        common: CommonArgs,
        /// Curvature coefficient
        #[arg(long, allow_negative_numbers = true)]
        mu: f64,
        /// Refuse to run when the small-period condition fails for degenerate kinetics
        #[arg(long)]
        strict: bool,
        /// Initial damping of the fixed-point iteration
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        damping: f64,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        /// Cells across the strip
        #[arg(long, default_value_t = 256)]
        n_xi: usize,
        /// Bound the rate below by 1/n
        #[arg(long)]
        regularize: Option<u32>,
    },
    /// Sample the homogenized speed c⁰(λ) and its derivative
    SpeedCurve {
        #[command(flatten)]
        common: CommonArgs,
        /// Log-spaced grid lo:hi:n
        #[arg(long, default_value = "1e-3:1e3:25")]
        lambda_grid: String,
        /// Central-difference step relative to λ
        #[arg(long, default_value_t = 1e-4)]
        fd_rel: f64,
        /// Tolerance on |c(λ_min) − max ℛ|
        #[arg(long, default_value_t = 2e-2)]
        small_tol: f64,
        /// Tolerance on |c(λ_max) − mean ℛ|
        #[arg(long, default_value_t = 1e-3)]
        large_tol: f64,
    },
    /// Sweep the period ε and compare with the homogenized limit
    Homogenize {
        #[command(flatten)]
        common: CommonArgs,
        /// Strictly decreasing periods, comma separated
        #[arg(long, allow_negative_numbers = true)]
        eps_list: String,
        #[arg(long, value_enum, default_value_t = RuleArg::Fixed)]
        mu_rule: RuleArg,
        /// μ for the fixed rule
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        mu: f64,
        /// λ for the linear rule, or the limit regime (0, inf or a value) of a custom rule
        #[arg(long, allow_negative_numbers = true)]
        lambda: Option<String>,
        /// One μ per ε for the custom rule, comma separated
        #[arg(long, allow_negative_numbers = true)]
        mu_list: Option<String>,
        #[arg(long)]
        strict: bool,
        #[arg(long, default_value_t = 256)]
        n_xi: usize,
    },
    /// Homogenized speed and corrector at one λ
    Corrector {
        #[command(flatten)]
        common: CommonArgs,
        /// 0, inf or a positive value
        #[arg(long, allow_negative_numbers = true)]
        lambda: String,
        /// Also write the second-order profile Q for this μ
        #[arg(long, allow_negative_numbers = true)]
        mu: Option<f64>,
    },
    /// Validate the standing assumptions of a medium
    Check {
        #[arg(long)]
        medium: PathBuf,
        /// Also test the small-period condition at this μ
        #[arg(long, allow_negative_numbers = true)]
        mu: Option<f64>,
        /// Write check.json here as well as to stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Resolved configuration of a run, as recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    Wave {
        medium: PathBuf,
        out: PathBuf,
        mu: f64,
        dat: bool,
        solver: FixedPointConfig,
    },
    SpeedCurve {
        medium: PathBuf,
        out: PathBuf,
        lambdas: Vec<f64>,
        dat: bool,
        small_tol: f64,
        large_tol: f64,
        curve: CurveConfig,
    },
    Homogenize {
        medium: PathBuf,
        out: PathBuf,
        eps: Vec<f64>,
        rule: MuRule,
        dat: bool,
        sweep: SweepConfig,
    },
    Corrector {
        medium: PathBuf,
        out: PathBuf,
        lambda: Lambda,
        mu: Option<f64>,
        dat: bool,
        front: FrontConfig,
    },
    Check {
        medium: PathBuf,
        out: Option<PathBuf>,
        mu: Option<f64>,
    },
}

fn usage(field: &str, message: impl Into<String>) -> Error {
    Error::config(field, message)
}

fn parse_list(field: &str, s: &str) -> Result<Vec<f64>, Error> {
    let vals: Result<Vec<f64>, _> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::parse::<f64>)
        .collect();
    let vals = vals.map_err(|e| usage(field, format!("{e} in {s:?}")))?;
    if vals.is_empty() {
        return Err(usage(field, "must not be empty"));
    }
    Ok(vals)
}

pub fn parse_lambda(s: &str) -> Result<Lambda, Error> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" => Ok(Lambda::Infinity),
        t => match t.parse::<f64>() {
            Ok(0.0) => Ok(Lambda::Zero),
            Ok(v) if v == f64::INFINITY => Ok(Lambda::Infinity),
            Ok(v) => Lambda::Finite(v).validate(),
            Err(e) => Err(usage("lambda", format!("{e} in {s:?}"))),
        },
    }
}

/// `lo:hi:n`, log-spaced.
pub fn parse_lambda_grid(s: &str) -> Result<Vec<f64>, Error> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || usage("lambda_grid", format!("expected lo:hi:n, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    crate::homog::SpeedCurve::log_grid(lo, hi, n)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Parse(_) | Error::Domain(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

fn init_threads() -> Result<(), Error> {
    match std::env::var("FLAMEFRONT_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                crate::par::init_threads(n);
                Ok(())
            }
            _ => Err(usage(
                "FLAMEFRONT_THREADS",
                format!("expected a positive integer, got {v:?}"),
            )),
        },
        Err(_) => Ok(()),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("flamefront: {e}");
        return EXIT_USAGE;
    }
    match commands::dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("flamefront: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_parsing() {
        assert_eq!(parse_lambda("inf").unwrap(), Lambda::Infinity);
        assert_eq!(parse_lambda("0").unwrap(), Lambda::Zero);
        assert_eq!(parse_lambda("2.5").unwrap(), Lambda::Finite(2.5));
        assert!(parse_lambda("-1").is_err());
        assert!(parse_lambda("abc").is_err());
        let g = parse_lambda_grid("1e-3:1e3:25").unwrap();
        assert_eq!(g.len(), 25);
        assert!(parse_lambda_grid("1:2").is_err());
        assert_eq!(parse_lambda_grid("2:2:1").unwrap(), vec![2.0]);
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_list("eps_list", "0.5, 0.25").unwrap(), vec![0.5, 0.25]);
        assert!(parse_list("eps_list", "").is_err());
        assert!(parse_list("eps_list", "a").is_err());
    }

    #[test]
    fn usage_errors_exit_64() {
        assert_eq!(run(["flamefront", "wave"]), EXIT_USAGE);
        assert_eq!(run(["flamefront", "bogus"]), EXIT_USAGE);
        assert_eq!(run(["flamefront", "--help"]), EXIT_OK);
    }
}
