mod args;
mod commands;
mod model;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or inputs; exit code 2.
    Usage(String),
    /// The computation failed (cap exceeded, infeasible budget, ...); exit code 1.
    Compute(resamplex::Error),
    Io(String),
}

impl CliError {
    pub fn usage(e: resamplex::Error) -> Self {
        CliError::Usage(e.to_string())
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<resamplex::Error> for CliError {
    fn from(e: resamplex::Error) -> Self {
        CliError::Compute(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
            CliError::Compute(e) => write!(f, "{e}"),
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("RESAMPLEX_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("RESAMPLEX_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Io(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let (config, report) = match &cli.command {
        Command::Estimate(a) => commands::estimate(a)?,
        Command::Variance(a) => commands::variance(a)?,
        Command::Optimize(a) => commands::optimize(a)?,
        Command::Partial(a) => commands::partial(a)?,
        Command::Coverage(a) => commands::coverage(a)?,
        Command::Reproduce(a) => commands::reproduce(a)?,
        Command::List(a) => commands::list(a)?,
    };
    output::emit(&config, report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
