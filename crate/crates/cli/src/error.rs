//! CLI-level errors and their process exit codes.
//!
//! The contract: 2 = usage or configuration problem, 3 = I/O failure,
//! 4 = data/parameter validation failure (the engine's diagnostics pass
//! through), 5 = a cross-validation leakage check tripped (which would mean
//! a bug, not bad input).

use std::path::PathBuf;

use thiserror::Error;

#[derive(Error, Debug)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot {action} {path}: {source}")]
    Io {
        action: &'static str,
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Format {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error(transparent)]
    Engine(lsagc_core::Error),
    #[error("leakage check failed: {0}")]
    Leakage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Format { .. } => 4,
            CliError::Engine(e) => match e {
                lsagc_core::Error::Io(_) => 3,
                lsagc_core::Error::FoldLeakage { .. } => 5,
                _ => 4,
            },
            CliError::Leakage(_) => 5,
        }
    }
}

impl From<lsagc_core::Error> for CliError {
    fn from(e: lsagc_core::Error) -> Self {
        match e {
            lsagc_core::Error::FoldLeakage { reason } => CliError::Leakage(reason),
            other => CliError::Engine(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Attach the path and verb an I/O failure happened on.
pub fn io_err<'a>(
    action: &'static str,
    path: &'a std::path::Path,
) -> impl FnOnce(std::io::Error) -> CliError + 'a {
    move |source| CliError::Io {
        action,
        path: path.to_path_buf(),
        source,
    }
}
