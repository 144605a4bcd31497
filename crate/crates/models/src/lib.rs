//! Desk-scale model zoo and data plumbing: architecture builders, a seeded
//! synthetic dataset generator, IDX ingestion, minibatch SGD training, and a
//! versioned on-disk weight format (JSON manifest + little-endian f32 blob).

mod dataset;
mod error;
mod idx;
mod store;
mod train;
mod zoo;

pub use dataset::{standard_splits, synthetic_dataset, Dataset, SplitPlan, SyntheticSpec};
pub use error::ModelError;
pub use idx::{load_idx_images, load_idx_labels, write_idx_images, write_idx_labels};
pub use store::{load_model, save_model, ModelManifest, FORMAT_VERSION};
pub use train::{evaluate, train, TrainConfig, TrainReport};
pub use zoo::{build_architecture, ARCH_IDS};

pub type Result<T> = std::result::Result<T, ModelError>;
