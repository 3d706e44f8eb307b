use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("corpus parameter mismatch: {left:?} vs {right:?}")]
    ParamsMismatch {
        left: crate::fingerprint::WinnowParams,
        right: crate::fingerprint::WinnowParams,
    },

    #[error("corpus cache {path}: {reason}")]
    BadCache { path: PathBuf, reason: String },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("not a readable git repository: {repo}: {reason}")]
    BadRepo { repo: PathBuf, reason: String },

    #[error("git {args} failed in {repo}: {stderr}")]
    GitCommand {
        repo: PathBuf,
        args: String,
        stderr: String,
    },

    #[error("invalid field {field:?}: {reason}")]
    InvalidField { field: String, reason: String },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("confusion counts are all zero")]
    EmptyCounts,

    #[error("duplicate project id in truth data: {0}")]
    DuplicateTruth(String),
}

pub type Result<T> = std::result::Result<T, Error>;
