use std::fmt;
use std::process::ExitCode;

use rotsum::experiments::ExperimentError;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or arguments.
    Usage(String),
    /// The run finished but its statistic is degenerate.
    Degenerate(String),
    Io(String),
    /// Replay produced different statistics.
    Mismatch(String),
    Other(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 2,
            CliError::Degenerate(_) => 3,
            CliError::Io(_) => 4,
            CliError::Mismatch(_) | CliError::Other(_) => 1,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Degenerate(m) => write!(f, "degenerate result: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Mismatch(m) => write!(f, "replay mismatch: {m}"),
            CliError::Other(e) => write!(f, "error: {e:#}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            e if e.is_degenerate() => CliError::Degenerate(e.to_string()),
            ExperimentError::InvalidConfig(m) => CliError::Usage(m),
            ExperimentError::InsufficientPoints { .. } => CliError::Usage(e.to_string()),
            e => CliError::Other(e.into()),
        }
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub type CliResult<T> = Result<T, CliError>;

impl From<rotsum::distributions::DistributionError> for CliError {
    fn from(e: rotsum::distributions::DistributionError) -> Self {
        match e {
            rotsum::distributions::DistributionError::DegenerateSample => CliError::Degenerate(e.to_string()),
            e => CliError::Other(e.into()),
        }
    }
}
