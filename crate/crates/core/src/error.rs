use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("node {node} has zero degree")]
    ZeroDegree { node: usize },
    #[error("node {node} has non-positive fractional degree {value:e}")]
    NonPositiveFractionalDegree { node: usize, value: f64 },
    #[error("zero spectral gap (disconnected or bipartite graph)")]
    ZeroSpectralGap,
    #[error("eigensolver did not converge")]
    NoConvergence,
    #[error("singular linear system (pivot {pivot} in column {column})")]
    Singular { column: usize, pivot: f64 },
    #[error("non-finite gradient in tensor `{tensor}`")]
    NonFiniteGradient { tensor: String },
    #[error("edge dropping disconnected the graph after {attempts} attempts")]
    DropEdgeDisconnected { attempts: usize },
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) => ErrorKind::Usage,
            Error::Parse { .. }
            | Error::InvalidGraph(_)
            | Error::InvalidDataset(_)
            | Error::DimensionMismatch(_)
            | Error::Checkpoint(_)
            | Error::Io { .. } => ErrorKind::Data,
            Error::NotSymmetric(_)
            | Error::ZeroDegree { .. }
            | Error::NonPositiveFractionalDegree { .. }
            | Error::ZeroSpectralGap
            | Error::NoConvergence
            | Error::Singular { .. }
            | Error::NonFiniteGradient { .. }
            | Error::DropEdgeDisconnected { .. } => ErrorKind::Numerical,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
