use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        context: &'static str,
        expected: Vec<usize>,
        got: Vec<usize>,
    },

    #[error("tensor data length {len} does not match shape {shape:?}")]
    LengthMismatch { shape: Vec<usize>, len: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error("parameter set does not match spec: {0}")]
    ParamMismatch(String),

    #[error("drop sample does not match spec: {0}")]
    DropMismatch(String),

    #[error("drop ratio {0} outside [0, 1]")]
    InvalidRatio(f64),

    #[error("class index {index} out of range for {classes} classes")]
    BadClassIndex { index: usize, classes: usize },
}
