//! `octk` command-line tool.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 numerical failure,
//! 4 a reproduction check failed.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::CommandKind;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    ChecksFailed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::ChecksFailed(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
            CliError::ChecksFailed(m) => write!(f, "checks failed: {m}"),
        }
    }
}

impl From<octk::Error> for CliError {
    fn from(e: octk::Error) -> Self {
        use octk::Error as E;
        match e {
            E::StepUnderflow { .. } | E::NonFinite { .. } | E::EmptyWindow | E::Io(_) | E::Csv(_) | E::Json(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "octk", version, about = "Organizing-center analysis of neuromorphic circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON config file, or a manifest from an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized initial conditions; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check recognition conditions of a singularity at a point.
    Recognize(Common),
    /// Trace and classify the bifurcation diagram.
    Trace(Common),
    /// Integrate a circuit ODE under input signals.
    Simulate(Common),
    /// Classify a trajectory or probe for coexisting attractors.
    Classify(Common),
    /// Classify every cell of a parameter grid.
    Scan(Common),
    /// Rerun one of the built-in figure protocols.
    Reproduce {
        /// fig4, fig5, fig6 or fig7.
        figure: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (kind, common) = match cli.command {
        Command::Recognize(c) => (CommandKind::Recognize, c),
        Command::Trace(c) => (CommandKind::Trace, c),
        Command::Simulate(c) => (CommandKind::Simulate, c),
        Command::Classify(c) => (CommandKind::Classify, c),
        Command::Scan(c) => (CommandKind::Scan, c),
        Command::Reproduce {
            figure,
            config,
            out,
            seed,
        } => return commands::reproduce_entry(figure, config, out, seed),
    };
    let mut rc = config::load(&common.config, kind)?;
    if let Some(s) = common.seed {
        rc.seed = s;
    }
    if let Some(o) = common.out {
        rc.out = Some(o);
    }
    commands::execute(rc)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("octk: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
