//! `dilute-cw`: batch driver for the annealed dilute Curie–Weiss library.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 invariant violation (a `verify` check failed). Errors are reported on
//! stderr as a single JSON object.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "dilute-cw",
    version,
    about = "Exact and asymptotic analysis of the annealed dilute Curie-Weiss model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Effective parameters, strip geometry and regime indicator.
    Inspect(CommonArgs),
    /// Exact law of the magnetization.
    Pmf(CommonArgs),
    /// Contour cumulants with Statulevičius margins.
    Cumulants(CommonArgs),
    /// Limit-theorem diagnostics at one size.
    Limits(CommonArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Long-format metrics over a schedule of sizes.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Number of spins.
    #[arg(long = "N")]
    pub n: Option<i64>,
    /// Edge probability in (0, 1].
    #[arg(long)]
    pub p: Option<f64>,
    /// Symbolic schedule p(N) = c N^-gamma, given as `c,gamma` with gamma < 2/3.
    #[arg(long = "p-schedule")]
    pub p_schedule: Option<String>,
    /// Inverse temperature in (0, 1).
    #[arg(long)]
    pub beta: Option<f64>,
    /// External field (contour center for cumulants).
    #[arg(long)]
    pub h0: Option<f64>,
    /// Highest cumulant order.
    #[arg(long = "J")]
    pub j: Option<usize>,
    /// Contour radius.
    #[arg(long = "R")]
    pub r: Option<f64>,
    /// Contour node count.
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Pressure source on the contour: exact or asymptotic.
    #[arg(long)]
    pub source: Option<String>,
    /// Significant decimal digits of the extended-precision engine
    /// (default from DILUTE_CW_PRECISION, else 50).
    #[arg(long = "precision-digits")]
    pub precision_digits: Option<u32>,
    /// Output file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format: csv or json.
    #[arg(long)]
    pub format: Option<String>,
    /// TOML file with the same keys as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct VerifyArgs {
    /// quick or full.
    #[arg(long)]
    profile: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
struct SweepArgs {
    /// Comma-separated sizes, e.g. `100,400,1600`.
    #[arg(long = "N-schedule", value_delimiter = ',')]
    n_schedule: Option<Vec<i64>>,
    #[command(flatten)]
    common: CommonArgs,
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Inspect(a) => commands::inspect(&config::resolve("inspect", &a, None, None)?),
        Command::Pmf(a) => commands::pmf(&config::resolve("pmf", &a, None, None)?),
        Command::Cumulants(a) => {
            commands::cumulants(&config::resolve("cumulants", &a, None, None)?)
        }
        Command::Limits(a) => commands::limits(&config::resolve("limits", &a, None, None)?),
        Command::Verify(v) => {
            commands::verify(&config::resolve("verify", &v.common, v.profile, None)?)
        }
        Command::Sweep(s) => {
            commands::sweep(&config::resolve("sweep", &s.common, None, s.n_schedule)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => return CliError::config(e.to_string().trim()).report(),
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => e.report(),
    }
}
