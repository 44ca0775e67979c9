use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;

use config::{RunConfig, Source};
use error::CliError;

/// Bounded extremal problems in H2 of the unit disk.
#[derive(Parser)]
#[command(name = "hbep", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(short, long)]
    config: PathBuf,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Override problem.q.
    #[arg(long)]
    q: Option<usize>,
    /// Override epsilon of the reference f.
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Tune mu to the configured bound and report the solution.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Emit a JSON record instead of the text summary.
        #[arg(long)]
        json: bool,
    },
    /// Error and discrepancy over a grid of mu, as CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Smallest series order matching a direct solve at mu0.
    Calibrate {
        #[command(flatten)]
        common: Common,
    },
    /// Perturbation experiments against the first-order bounds, as CSV.
    Stability {
        #[command(flatten)]
        common: Common,
    },
    /// Moments F(k) and k F(k), as CSV.
    Moments {
        #[command(flatten)]
        common: Common,
    },
    /// Carleman extrapolation from I at interior points, as CSV.
    Carleman {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(&common.config).map_err(|source| CliError::Io {
        path: common.config.display().to_string(),
        source,
    })?;
    let mut cfg = RunConfig::from_toml(&text)?;
    if let Some(q) = common.q {
        cfg.problem.q = q;
    }
    if let Some(eps) = common.epsilon {
        match &mut cfg.problem.f {
            Source::Reference { epsilon } => *epsilon = Some(eps),
            _ => return Err(CliError::config("--epsilon: problem.f is not the reference source")),
        }
    }
    Ok(cfg)
}

fn write(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, text) = match &cli.command {
        Command::Solve { common, json } => (common, commands::solve(&load(common)?, *json)?),
        Command::Sweep { common } => (common, commands::sweep(&load(common)?)?),
        Command::Calibrate { common } => (common, commands::calibrate_cmd(&load(common)?)?),
        Command::Stability { common } => (common, commands::stability(&load(common)?)?),
        Command::Moments { common } => (common, commands::moments(&load(common)?)?),
        Command::Carleman { common } => (common, commands::carleman(&load(common)?)?),
    };
    write(common.output.as_deref(), &text)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hbep: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
