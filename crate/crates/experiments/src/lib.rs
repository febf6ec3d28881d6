//! Experiment harness behind the `relaysec` binary.

pub mod args;
pub mod experiments;
pub mod validate;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;

use args::{build_spec, Cli, Command, ExperimentSpec, Kind};

/// Environment variable that caps the number of worker threads.
pub const WORKERS_ENV: &str = "RELAYSEC_WORKERS";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    ValidationFailed,
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::ValidationFailed => 2,
            CliError::Io { .. } => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::ValidationFailed => f.write_str("one or more checks failed"),
            CliError::Io { path, source } => write!(f, "cannot write {}: {source}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}

/// Sizes the global worker pool from [`WORKERS_ENV`]; all cores when unset.
pub fn configure_workers() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let workers: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&w| w >= 1)
        .ok_or_else(|| CliError::Usage(format!("{WORKERS_ENV}={raw:?} must be a positive integer")))?;
    // A pool already built by an earlier call in the same process is kept.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    Ok(())
}

fn write_output(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|source| CliError::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => std::io::stdout()
            .lock()
            .write_all(content.as_bytes())
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

/// Runs a resolved experiment and writes its output.
pub fn execute(spec: &ExperimentSpec) -> Result<(), CliError> {
    let (content, passed) = match spec.kind {
        Kind::Outage => (experiments::run_outage(spec)?, true),
        Kind::SecrecyRate => (experiments::run_secrecy_rate(spec)?, true),
        Kind::Validate => validate::run_validate(spec),
        Kind::DistCheck => experiments::run_dist_check(spec)?,
    };
    write_output(spec.out.as_deref(), &content)?;
    if passed {
        Ok(())
    } else {
        Err(CliError::ValidationFailed)
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = configure_workers().and_then(|()| {
        let spec = match &cli.command {
            Command::Outage(a) => build_spec(Kind::Outage, a, false)?,
            Command::SecrecyRate(a) => build_spec(Kind::SecrecyRate, a, false)?,
            Command::Validate(v) => build_spec(Kind::Validate, &v.common, v.corrupt_beta)?,
            Command::DistCheck(a) => build_spec(Kind::DistCheck, a, false)?,
        };
        execute(&spec)
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("relaysec: {e}");
            e.exit_code()
        }
    }
}
