use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config invalid at `{path}`: {msg}")]
    ConfigInvalid { path: String, msg: String },
    #[error("cannot read {}: {source}", path.display())]
    ConfigRead {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("solver error [{}]: {0}", .0.code())]
    Solver(#[from] repmut::Error),
    #[error("cannot write {}: {source}", path.display())]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        CliError::ConfigInvalid {
            path: path.into(),
            msg: msg.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ConfigInvalid { .. } | CliError::ConfigRead { .. } => 2,
            CliError::Solver(_) | CliError::Output { .. } => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::ConfigInvalid { .. } | CliError::ConfigRead { .. } => "ConfigInvalid",
            CliError::Solver(_) | CliError::Output { .. } => "SolverError",
        }
    }
}
