use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV output: {0}")]
    Csv(#[from] csv::Error),
    #[error("suite file {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] ripm_core::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
