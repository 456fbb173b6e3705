use std::path::PathBuf;

use thiserror::Error;

use crate::network::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("no path from {from} to {to}")]
    NoPath { from: NodeId, to: NodeId },

    #[error("zone miss: {0}")]
    ZoneMiss(String),

    #[error("no zone: {0}")]
    NoZone(String),

    #[error("no solution: {0}")]
    NoSolution(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), line, msg: msg.into() }
    }

    /// Domain errors are outcomes of a well-formed request (no path, zone miss, ...).
    pub fn is_domain(&self) -> bool {
        matches!(self, Error::NoPath { .. } | Error::ZoneMiss(_) | Error::NoZone(_) | Error::NoSolution(_))
    }
}
