//! `sinklab` — drift-diffusion in a V-shaped potential with a
//! time-dependent point sink at the origin.
//!
//! Subcommands: `solve` (analytic Laplace-domain route), `oracle`
//! (Crank-Nicolson and optional Monte Carlo reference), `compare`
//! (cross-route agreement report plus closed-form fidelity diagnostics),
//! `sweep` (Cartesian parameter scan), `selftest` (kernel invariants).
//!
//! Exit codes: 0 on success, 2 for configuration/validation errors, 3
//! for numerical failures. Errors are emitted to stderr as a single JSON
//! object `{"error": {"kind", "message", "exit_code"}}`.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::load_config;

/// A CLI failure with its exit-code class.
#[derive(Debug, Clone)]
pub enum CliError {
    /// Bad configuration or invalid inputs (exit 2).
    Config(String),
    /// The numerics gave up (exit 3).
    Numerical(String),
    /// Filesystem trouble writing results (exit 3).
    Io(String),
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config(message.into())
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError::Numerical(message.into())
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError::Io(message.into())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }
}

impl From<sinklab_core::Error> for CliError {
    fn from(e: sinklab_core::Error) -> Self {
        if e.exit_code() == 2 {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

#[derive(Parser)]
#[command(
    name = "sinklab",
    version,
    about = "Drift-diffusion in a V-shaped potential with a time-dependent \
             point sink: Laplace-domain solver plus cross-validating oracles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic route: Laplace-domain closure inverted to the time domain
    Solve(RunArgs),
    /// Crank-Nicolson reference solution (plus optional Monte Carlo)
    Oracle(RunArgs),
    /// Cross-route agreement report with closed-form fidelity diagnostics
    Compare(RunArgs),
    /// Cartesian parameter sweep of the analytic survival curve
    Sweep(RunArgs),
    /// Fast invariant checks of the numerical kernels
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file
    #[arg(long)]
    config: PathBuf,
    /// Dotted-path override, e.g. --set sink.alpha0=0.75 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (created if missing)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SelftestArgs {
    /// Optional configuration file; validated if given (the checks
    /// themselves are parameter-free)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dotted-path override applied before validation (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Optional output directory for selftest.json
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            return emit_error(&CliError::config(e.to_string()));
        }
    };
    let result = match &cli.command {
        Command::Solve(args) => load_config(&args.config, &args.set)
            .and_then(|(cfg, _)| commands::solve_cmd::cmd_solve(&cfg, &args.out)),
        Command::Oracle(args) => load_config(&args.config, &args.set)
            .and_then(|(cfg, _)| commands::oracle::cmd_oracle(&cfg, &args.out)),
        Command::Compare(args) => load_config(&args.config, &args.set)
            .and_then(|(cfg, _)| commands::compare::cmd_compare(&cfg, &args.out)),
        Command::Sweep(args) => load_config(&args.config, &args.set)
            .and_then(|(cfg, raw)| commands::sweep::cmd_sweep(&cfg, &raw, &args.out)),
        Command::Selftest(args) => {
            let validated = match &args.config {
                Some(path) => load_config(path, &args.set).map(|_| ()),
                None => Ok(()),
            };
            validated.and_then(|()| commands::selftest::cmd_selftest(args.out.as_deref()))
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => emit_error(&e),
    }
}

fn emit_error(e: &CliError) -> i32 {
    let code = e.exit_code();
    let payload = serde_json::json!({
        "error": {
            "kind": e.kind(),
            "message": e.message(),
            "exit_code": code,
        }
    });
    eprintln!("{payload}");
    code
}
