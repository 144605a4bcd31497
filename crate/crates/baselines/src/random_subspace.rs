use attack::{run_bandit_loop, AttackConfig, AttackResult};
use micronet::Tensor;
use oracle::VictimOracle;
use rand::Rng;

use crate::basis::{gaussian_combination, OrthonormalBasis};
use crate::{BaselineError, Result};

/// Bandit attack confined to a fixed random subspace: the same two-query
/// loop as the subspace attack, but the search direction is a Gaussian
/// combination of per-image basis vectors that never change, and no drop
/// schedule applies.
pub fn random_subspace_attack(
    x: &Tensor,
    label: usize,
    victim: &mut VictimOracle,
    basis: &OrthonormalBasis,
    cfg: &AttackConfig,
    rng: &mut impl Rng,
) -> Result<AttackResult> {
    if basis.ambient_dim() != x.numel() {
        return Err(BaselineError::Config(format!(
            "basis lives in R^{}, input has {} pixels",
            basis.ambient_dim(),
            x.numel()
        )));
    }
    // Unit expected norm keeps the g-vs-tau*u balance of the estimator
    // independent of m; at m = n this is exactly the Gaussian-bandit
    // direction distribution.
    let scale = 1.0 / (basis.dimension() as f32).sqrt();
    run_bandit_loop(
        x,
        label,
        victim,
        cfg,
        false,
        |_state| {
            let mut u = gaussian_combination(basis, rng);
            for v in u.data_mut() {
                *v *= scale;
            }
            Ok(u)
        },
        |_| {},
    )
    .map_err(BaselineError::from)
}
