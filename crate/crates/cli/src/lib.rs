//! Command implementations behind the `netestim` binary.
//!
//! Everything the binary does is callable as a library function so the
//! integration tests can drive commands directly and compare output bytes.

pub mod commands;
pub mod config;

use std::fmt;

/// Failure classes mapped to process exit codes: configuration and usage
/// problems exit 2, numerical failures exit 3, I/O problems exit 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    Numerical(String),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            CliError::Io(err) => write!(f, "io error: {err}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<netestim::sim::SimError> for CliError {
    fn from(err: netestim::sim::SimError) -> Self {
        use netestim::sim::SimError;
        match &err {
            SimError::InvalidConfig(_) => CliError::Config(err.to_string()),
            _ => CliError::Numerical(err.to_string()),
        }
    }
}

impl From<netestim::thresholds::ThresholdError> for CliError {
    fn from(err: netestim::thresholds::ThresholdError) -> Self {
        CliError::Numerical(err.to_string())
    }
}

impl From<netestim::topology::TopologyError> for CliError {
    fn from(err: netestim::topology::TopologyError) -> Self {
        CliError::Config(err.to_string())
    }
}
