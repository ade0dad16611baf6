use std::io::BufReader;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod table;

use commands::Loaded;
use config::{Command, FileConfig, Flags, RunConfig};
use error::CliError;

/// Simulate stable Lévy increments and study the scaling of their
/// empirical moments.
#[derive(Debug, Parser)]
#[command(name = "levyscale", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Sub {
    /// Write N = k lcm(1..=T) unit increments to a series file.
    Simulate,
    /// Moment grid and log-log fits of the scaling exponents.
    Scaling,
    /// Convergence of the normalized moment ratio along an N ladder.
    Ratio,
    /// Window-size invariance of the normed moments.
    Limits,
    /// Sweep of the block-extremes sandwich inequality.
    Extremes,
    /// Tail exponent and tail constant of the unit increments.
    Tails,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Simulate => Command::Simulate,
            Sub::Scaling => Command::Scaling,
            Sub::Ratio => Command::Ratio,
            Sub::Limits => Command::Limits,
            Sub::Extremes => Command::Extremes,
            Sub::Tails => Command::Tails,
        }
    }
}

fn load_input(path: &std::path::Path) -> Result<Loaded, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let (header, values) = levyscale::io::read_series(BufReader::new(file))
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    Ok(Loaded { header, values })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let command = Command::from(cli.command);
    let file = match &cli.flags.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let input = cli.flags.input.clone().or_else(|| file.input.clone());
    let loaded = match (&input, command) {
        (Some(p), Command::Scaling | Command::Tails) => Some(load_input(p)?),
        (Some(_), _) => {
            return Err(CliError::Invalid(
                "--input is only supported by scaling and tails".into(),
            ))
        }
        (None, _) => None,
    };
    let header = loaded.as_ref().map(|l| l.header.clone()).unwrap_or_default();
    let cfg = RunConfig::resolve(command, &cli.flags, &file, &header)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))?;
    }
    match command {
        Command::Simulate => commands::simulate(&cfg),
        Command::Scaling => commands::scaling(&cfg, loaded.as_ref()),
        Command::Ratio => commands::ratio(&cfg),
        Command::Limits => commands::limits(&cfg),
        Command::Extremes => commands::extremes(&cfg),
        Command::Tails => commands::tails(&cfg, loaded.as_ref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
