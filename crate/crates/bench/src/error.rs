use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("unknown preset {0:?} (expected fig2, fig3 or fig4)")]
    UnknownPreset(String),

    #[error("cannot parse scenario file {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{estimates} estimates for {truths} targets")]
    CountMismatch { estimates: usize, truths: usize },

    #[error(transparent)]
    Core(#[from] afdm_core::Error),
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
