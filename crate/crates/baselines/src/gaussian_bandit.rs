use attack::{run_bandit_loop, AttackConfig, AttackResult};
use micronet::Tensor;
use oracle::VictimOracle;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::Result;

/// Full-dimension bandit baseline: fresh search direction `u ~ N(0, I/n)`
/// every iteration, no references, no drop schedule. The `1/n` scaling gives
/// unit expected norm before the probe normalization (which absorbs scale
/// anyway).
pub fn bandit_gaussian_attack(
    x: &Tensor,
    label: usize,
    victim: &mut VictimOracle,
    cfg: &AttackConfig,
    rng: &mut impl Rng,
) -> Result<AttackResult> {
    let n = x.numel();
    let scale = (1.0 / n as f32).sqrt();
    run_bandit_loop(
        x,
        label,
        victim,
        cfg,
        false,
        |_state| {
            let u: Vec<f32> = (0..n)
                .map(|_| <StandardNormal as Distribution<f32>>::sample(&StandardNormal, rng) * scale)
                .collect();
            Ok(Tensor::from_vec(u))
        },
        |_| {},
    )
    .map_err(crate::BaselineError::from)
}
