use std::path::PathBuf;

use serde::Serialize;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("threshold out of range: floor(k_n * tau) = {rank} but only {available} observations are used")]
    ThresholdOutOfRange { rank: usize, available: usize },

    /// `p(0)` is 0 or 1, so `ln p(0)` cannot be used.
    #[error("degenerate compound distribution: p(0) = {p0}")]
    DegenerateCompound { p0: f64 },

    #[error("empty cluster moment: sum of j^{order} * pi(j) over j <= {m} is zero")]
    EmptyClusterMoment { order: u32, m: usize },

    #[error("no clusters: no exceedance of the threshold")]
    NoClusters,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// Failure class, used by the experiment harness and JSON output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    InvalidArgument,
    ThresholdOutOfRange,
    DegenerateCompound,
    EmptyClusterMoment,
    NoClusters,
    Io,
    Parse,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_) => ErrorKind::InvalidArgument,
            Error::ThresholdOutOfRange { .. } => ErrorKind::ThresholdOutOfRange,
            Error::DegenerateCompound { .. } => ErrorKind::DegenerateCompound,
            Error::EmptyClusterMoment { .. } => ErrorKind::EmptyClusterMoment,
            Error::NoClusters => ErrorKind::NoClusters,
            Error::Io { .. } => ErrorKind::Io,
            Error::Parse { .. } => ErrorKind::Parse,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
