use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the allocation engine and simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid rho table: {0}")]
    InvalidTable(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("extreme point did not converge after {iterations} iterations (last p = {last})")]
    NoConvergence { iterations: usize, last: f64 },

    #[error("{stage} stage infeasible: {reason}")]
    Infeasible { stage: Stage, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Pipeline stage an infeasibility is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Pairing,
    InterGroup,
    IntraGroup,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Pairing => "pairing",
            Stage::InterGroup => "inter-group",
            Stage::IntraGroup => "intra-group",
        })
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
