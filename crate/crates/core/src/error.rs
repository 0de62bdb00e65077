use std::path::PathBuf;

use crate::cluster::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid parameter `{name}`: {value}")]
    InvalidParameter { name: &'static str, value: String },

    #[error("node {0} has not been observed")]
    UnseenNode(NodeId),

    #[error("node {0} is outside the network")]
    UnknownNode(NodeId),

    #[error("link length must be positive, got {0}")]
    NonPositiveLength(f64),

    #[error("malformed presentation log at line {line}: {reason}")]
    MalformedLog { line: u64, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config file: {0}")]
    ConfigFile(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: impl std::fmt::Display) -> Self {
        Error::InvalidParameter {
            name,
            value: value.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
