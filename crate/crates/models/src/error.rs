use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Engine(#[from] micronet::Error),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("manifest parse error: {0}")]
    Manifest(#[from] serde_json::Error),

    #[error("unknown architecture id `{0}`")]
    UnknownArch(String),

    #[error("unknown model format version {0}")]
    UnknownFormatVersion(u32),

    #[error("weight blob checksum mismatch: manifest {expected}, blob {actual}")]
    ChecksumMismatch { expected: String, actual: String },

    #[error("weight blob has {got} bytes, spec needs {expected}")]
    TruncatedBlob { expected: usize, got: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid IDX file: {0}")]
    IdxFormat(String),

    #[error("invalid training config: {0}")]
    InvalidConfig(String),

    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Diverged { epoch: usize },
}

impl ModelError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        ModelError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
