//! `tautband` — command-line front end for the taut-string toolkit.
//!
//! One binary, six subcommands (`solve`, `estimate`, `pursuit`, `bounds`,
//! `buffer`, `sweep`). Scalar reports go to JSON, vector data to CSV with
//! fixed column orders (documented per flag in `--help`). Every file
//! output is accompanied by a `*.manifest.json` describing the resolved
//! run; `--from-manifest` replays one and reproduces the data outputs byte
//! for byte.
//!
//! Exit codes: 0 success, 1 bad input, 2 internal invariant failure.

mod commands;
mod io;
mod manifest;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(
    name = "tautband",
    version,
    about = "Taut strings in discrete tubes: solver, Monte Carlo harness, pursuit, bounds, buffer scheduling"
)]
struct Cli {
    /// Worker threads for path-parallel experiments (default: the
    /// TAUTBAND_THREADS environment variable, else all cores). Results do
    /// not depend on this.
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,

    /// Silence progress notes on standard error
    #[arg(long, global = true)]
    quiet: bool,

    /// Replay a recorded manifest instead of naming a subcommand
    #[arg(long, value_name = "MANIFEST")]
    from_manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

/// The full resolved parameter set of a run; serialized into manifests.
#[derive(Subcommand, Clone, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
enum Command {
    /// Solve one taut-string instance from a tube CSV (`t,lower,upper`)
    Solve(commands::SolveArgs),
    /// Monte Carlo estimate of the normalized taut-string or pursuit effort
    Estimate(commands::EstimateArgs),
    /// Markovian pursuit experiment with a configurable clamp margin
    Pursuit(commands::PursuitArgs),
    /// Closed-form bound report as JSON
    Bounds(commands::BoundsArgs),
    /// Loss scheduling through a finite buffer, taut string vs FIFO
    Buffer(commands::BufferArgs),
    /// Normalized-effort convergence sweep across horizons
    Sweep(commands::SweepArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Estimate(_) => "estimate",
            Command::Pursuit(_) => "pursuit",
            Command::Bounds(_) => "bounds",
            Command::Buffer(_) => "buffer",
            Command::Sweep(_) => "sweep",
        }
    }
}

#[derive(Debug)]
enum CliError {
    Core(tautband_core::Error),
    Io(std::io::Error),
    Input(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_internal() => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Input(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<tautband_core::Error> for CliError {
    fn from(e: tautband_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(format!("malformed JSON: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads(cli.threads)?;
    let command = match (cli.command, cli.from_manifest) {
        (Some(_), Some(_)) => {
            return Err(CliError::Input(
                "give either a subcommand or --from-manifest, not both".into(),
            ))
        }
        (Some(cmd), None) => cmd,
        (None, Some(path)) => {
            let recorded = manifest::load(&path)?;
            if !cli.quiet {
                eprintln!(
                    "replaying `{}` from {} (recorded by tautband {})",
                    recorded.config.name(),
                    path.display(),
                    recorded.tool_version
                );
            }
            recorded.config
        }
        (None, None) => {
            return Err(CliError::Input(
                "missing subcommand; run `tautband --help` for the grammar".into(),
            ))
        }
    };
    commands::execute(command, cli.quiet)
}

fn configure_threads(flag: Option<usize>) -> Result<(), CliError> {
    let requested = match flag {
        Some(k) => Some(k),
        None => match std::env::var("TAUTBAND_THREADS") {
            Ok(raw) => Some(raw.parse::<usize>().map_err(|_| {
                CliError::Input(format!(
                    "TAUTBAND_THREADS must be a positive integer, got {raw:?}"
                ))
            })?),
            Err(_) => None,
        },
    };
    let Some(k) = requested else { return Ok(()) };
    if k == 0 {
        return Err(CliError::Input("--threads must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Input(format!("cannot size the worker pool: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    {
        eprintln!("note: built without the `parallel` feature; --threads {k} has no effect");
    }
    Ok(())
}
