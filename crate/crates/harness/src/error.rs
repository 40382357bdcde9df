use dtl_core::DtlError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] DtlError),
    #[error("unknown inequality id `{0}`")]
    RegistryMiss(String),
    #[error("unknown or unusable generator kind `{0}`")]
    BadKind(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o failure on {path}: {source}")]
    IoFailure {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type HarnessResult<T> = std::result::Result<T, HarnessError>;
