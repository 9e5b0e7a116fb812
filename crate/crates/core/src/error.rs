use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration: {0}")]
    Config(String),
    #[error("config parse: {0}")]
    ConfigParse(#[from] toml::de::Error),
    #[error(transparent)]
    Homotopy(#[from] crate::homotopy::HomotopyError),
    #[error(transparent)]
    Guidance(#[from] crate::guidance::GuidanceError),
    #[error(transparent)]
    Decision(#[from] crate::orchestrator::DecisionError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}
