//! Scenario handling, SI conversion and command dispatch for the
//! `phonon-chill` command-line tool.

use std::fmt;

pub mod output;
pub mod runner;
pub mod scenario;

#[derive(Debug)]
pub enum CliError {
    /// Bad scenario, flags or file formats (exit code 2).
    Config(String),
    /// Filesystem trouble (exit code 2).
    Io(String),
    /// Engine-level failure (exit code 2 for configuration-shaped errors,
    /// 3 for numerical ones).
    Engine(phonon_chill::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Io(msg) => write!(f, "{msg}"),
            CliError::Engine(err) => write!(f, "{err}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<phonon_chill::Error> for CliError {
    fn from(err: phonon_chill::Error) -> Self {
        CliError::Engine(err)
    }
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Engine(err) => match err {
                phonon_chill::Error::InvalidConfig(_)
                | phonon_chill::Error::NonSquare { .. }
                | phonon_chill::Error::DimensionMismatch { .. }
                | phonon_chill::Error::UnsupportedKind { .. } => "config",
                _ => "numerical",
            },
        }
    }

    /// Process exit code: 2 for configuration errors, 3 for numerical ones.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "numerical" => 3,
            _ => 2,
        }
    }
}
