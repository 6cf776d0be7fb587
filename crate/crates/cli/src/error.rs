use std::path::PathBuf;

use thiserror::Error;

/// Failure of a CLI run, mapped onto the documented exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("infeasible regime: {0}")]
    Infeasible(String),

    #[error("numeric failure: {0}")]
    Numeric(sdelab::Error),

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::Io { .. } => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<sdelab::Error> for CliError {
    fn from(e: sdelab::Error) -> Self {
        use sdelab::Error as E;
        match e {
            E::InfeasibleRegime(msg) => CliError::Infeasible(msg),
            // these are raised by parameter validation before any sampling
            E::Domain(_)
            | E::Expression { .. }
            | E::Unsupported(_)
            | E::EmptyWindow { .. }
            | E::LevelTooFine { .. }
            | E::ResolutionTooCoarse { .. } => CliError::Config(e.to_string()),
            other => CliError::Numeric(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
