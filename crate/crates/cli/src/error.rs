use std::path::{Path, PathBuf};

use bnr_core::BnrError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },

    #[error("{0}")]
    Model(BnrError),

    #[error("numerical failure: {0}")]
    Numerical(BnrError),

    #[error("chains did not converge: max R-hat {max_rhat:.4} > {threshold} after {burn_in} burn-in sweeps")]
    NotConverged {
        max_rhat: f64,
        threshold: f64,
        burn_in: u64,
    },
}

impl CliError {
    /// Process exit status: 2 non-convergence, 3 numerical failure, 4 I/O or configuration.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::NotConverged { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Config(_) | CliError::Io { .. } | CliError::Format { .. } | CliError::Model(_) => 4,
        }
    }

    pub(crate) fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn format(path: &Path, msg: impl std::fmt::Display) -> CliError {
        CliError::Format {
            path: path.to_path_buf(),
            msg: msg.to_string(),
        }
    }
}

impl From<BnrError> for CliError {
    fn from(e: BnrError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e)
        } else {
            CliError::Model(e)
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
