use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment plan: {0}")]
    Plan(String),

    #[error("no attackable images (correctly classified eval samples)")]
    NoAttackableImages,

    #[error(transparent)]
    Model(#[from] models::ModelError),

    #[error(transparent)]
    Attack(#[from] attack::AttackError),

    #[error(transparent)]
    Baseline(#[from] baselines::BaselineError),

    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),

    #[error(transparent)]
    Engine(#[from] micronet::Error),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("records file malformed: {0}")]
    Records(String),
}

impl HarnessError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
