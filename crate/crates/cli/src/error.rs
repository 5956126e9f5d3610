use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),

    #[error("cannot read '{}': {source}", path.display())]
    Input {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Model(#[from] topomode::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: String,
        source: Box<CliError>,
    },
}

pub type Result<T> = std::result::Result<T, CliError>;
