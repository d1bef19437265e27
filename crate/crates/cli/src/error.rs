use std::path::PathBuf;

use cfdcast::AreaId;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{what} not found at {path}; run `cfdcast {command}` first")]
    MissingArtifact {
        what: &'static str,
        path: PathBuf,
        command: &'static str,
    },
    #[error("no stored profile for {0}")]
    NoProfile(AreaId),
    #[error("{0}")]
    Config(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::MissingArtifact { .. } => "cli.missing_artifact",
            CliError::NoProfile(_) => "cli.no_profile",
            CliError::Config(_) => "cli.invalid_config",
            CliError::Write { .. } => "cli.io",
        }
    }
}

/// Module-qualified code of the first recognised error in the chain.
pub fn error_code(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<cfdcast::Error>() {
            return e.code();
        }
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return e.code();
        }
    }
    "cli.error"
}
