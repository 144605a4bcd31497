//! Comparison attacks the subspace method is measured against: bandit
//! optimization over fixed random subspaces, the full-dimension Gaussian
//! bandit, NES with antithetic sampling, and the pure transfer attack.

mod basis;
mod gaussian_bandit;
mod nes;
mod random_subspace;
mod transfer;

use thiserror::Error;

pub use basis::{gaussian_combination, random_orthonormal_basis, OrthonormalBasis};
pub use gaussian_bandit::bandit_gaussian_attack;
pub use nes::{nes_attack, nes_gradient, NesConfig, NesEstimate};
pub use random_subspace::random_subspace_attack;
pub use transfer::transfer_attack;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("invalid baseline config: {0}")]
    Config(String),

    #[error(transparent)]
    Attack(#[from] attack::AttackError),

    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),

    #[error(transparent)]
    Engine(#[from] micronet::Error),
}

pub type Result<T> = std::result::Result<T, BaselineError>;
