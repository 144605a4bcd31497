//! Experiment orchestration: split planning, deterministic batch attack runs
//! with CSV/JSON emission, gradient-subspace analyses, the dimension sweep,
//! and the ablation drivers behind the CLI.

mod ablate;
mod analysis;
mod batch;
mod error;
mod grid;
mod plan;
mod records;
mod seeding;
mod sweep;

pub use ablate::{ablation_dropout, ablation_references, DropoutAblationRow, ReferenceAblationRow};
pub use analysis::{projection_residual, residual_sweep, ResidualRow};
pub use batch::{run_batch, BatchOutput};
pub use error::HarnessError;
pub use grid::{grid_sweep, write_grid_csv, GridRow};
pub use plan::{AttackKind, AttackPlanEntry, DatasetSource, ExperimentPlan, SplitSizes, PLAN_VERSION};
pub use records::{compute_metrics, read_records_csv, write_metrics_json, write_records_csv, Metrics, RunRecord};
pub use seeding::derive_seed;

/// Plan-seeded choice of correctly classified eval images.
pub fn select_attackable_images(
    spec: &micronet::NetworkSpec,
    params: &micronet::ParameterSet<f32>,
    eval: &models::Dataset,
    count: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    batch::select_attackable(spec, params, eval, count, seed)
}
pub use sweep::{dimension_sweep, write_sweep_csv, DimensionSweepRow};

pub type Result<T> = std::result::Result<T, HarnessError>;
