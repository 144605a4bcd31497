//! Score-based black-box attack built on bandit finite differences: a running
//! gradient estimate is nudged along prior gradients drawn from reference
//! models, costing exactly two victim queries per iteration, followed by a
//! signed PGD step projected into the L-infinity ball.

mod bandit;
mod config;
mod loss;
mod runner;
mod state;
mod subspace;

use thiserror::Error;

pub use bandit::{bandit_step, next_drop_ratio, pgd_project, ProbeOutcome};
pub use config::{AttackConfig, Goal, Mode};
pub use loss::{cw_hinge_loss, is_success, probe_loss};
pub use runner::{run_bandit_loop, StepTrace};
pub use state::{AttackResult, AttackState, FailureReason};
pub use subspace::{
    choose_reference, full_subspace_direction, subspace_attack, subspace_attack_observed,
};

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("invalid attack config: {0}")]
    Config(String),

    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),

    #[error(transparent)]
    Engine(#[from] micronet::Error),
}

pub type Result<T> = std::result::Result<T, AttackError>;
