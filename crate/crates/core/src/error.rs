use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid skeleton: {0}")]
    Skeleton(String),

    #[error("invalid motion: {0}")]
    Motion(String),

    #[error("invalid proxy parameters: {0}")]
    Proxy(String),

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty sample set")]
    EmptySampleSet,

    #[error("undefined antipodal: point lies on the cylinder axis")]
    UndefinedAntipodal,

    #[error("point is not interior to the primitive")]
    NotInterior,

    #[error("open mesh: {0}")]
    OpenMesh(String),

    #[error("non-finite value in {stage}: {detail}")]
    NonFinite { stage: &'static str, detail: String },

    #[error("{}: {cause}", path.display())]
    Io { path: PathBuf, cause: std::io::Error },

    #[error("{context}: {cause}")]
    Json { context: String, cause: serde_json::Error },
}

/// Coarse classification used to pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NonFinite { .. } => ErrorKind::Numerical,
            _ => ErrorKind::Input,
        }
    }

    pub fn io(path: impl Into<PathBuf>, cause: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            cause,
        }
    }

    pub(crate) fn json(context: impl Into<String>, cause: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            cause,
        }
    }
}
