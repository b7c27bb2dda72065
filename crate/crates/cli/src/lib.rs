pub mod args;
pub mod commands;
pub mod figures;

use std::ffi::OsString;
use std::fmt;

use clap::Parser;

pub use args::{Cli, Command};

/// Failure of a CLI invocation, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<irfkit::Error> for CliError {
    fn from(e: irfkit::Error) -> Self {
        if e.is_data_error() {
            CliError::Data(e.to_string())
        } else if e.is_numerical_error() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("irfkit: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> CliResult<()> {
    let command = match command {
        Command::Run(r) => {
            let text = std::fs::read_to_string(&r.config)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", r.config.display())))?;
            let json: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("config {} is not valid JSON: {e}", r.config.display())))?;
            let argv = args::config_to_argv(&json).map_err(CliError::Usage)?;
            Cli::try_parse_from(argv)
                .map_err(|e| CliError::Usage(format!("config {}: {}", r.config.display(), e.render())))?
                .command
        }
        c => c,
    };
    let threads = thread_count(&command)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads:?} worker threads: {e}")))?;
    pool.install(|| commands::dispatch(&command))
}

fn thread_count(command: &Command) -> CliResult<Option<usize>> {
    if let Ok(v) = std::env::var("IRFKIT_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("IRFKIT_THREADS='{v}' is not a thread count")))?;
        if n == 0 {
            return Err(CliError::Usage("IRFKIT_THREADS must be at least 1".into()));
        }
        return Ok(Some(n));
    }
    let hint = match command {
        Command::Test(a) => a.output.threads,
        Command::Simulate(a) => a.output.threads,
        Command::Irf(a) => a.output.threads,
        Command::Multiplier(a) => a.output.threads,
        Command::Replicate(a) => a.output.threads,
        Command::Run(_) => None,
    };
    if hint == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    Ok(hint)
}
