use micronet::Tensor;
use oracle::{ReferenceOracle, VictimOracle};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::runner::{run_bandit_loop, StepTrace};
use crate::{AttackConfig, AttackError, AttackResult, Goal, Mode, Result};

/// Uniform reference selection; the coordinate-descent policy draws one index
/// per iteration.
pub fn choose_reference(count: usize, rng: &mut impl Rng) -> usize {
    rng.random_range(0..count)
}

/// Gaussian combination of fresh prior gradients from every reference:
/// `u = sum_i alpha_i * u_i`, `alpha_i ~ N(0, 1)`.
pub fn full_subspace_direction(
    refs: &[ReferenceOracle],
    x: &Tensor,
    label: usize,
    ratio: f64,
    goal: Goal,
    rng: &mut impl Rng,
) -> Result<Tensor> {
    if refs.is_empty() {
        return Err(AttackError::Config("no reference models".into()));
    }
    let mut combined = vec![0.0f32; x.numel()];
    for reference in refs {
        let alpha: f32 = StandardNormal.sample(rng);
        let u = reference.prior_gradient(x, label, ratio, goal.loss_kind(), rng)?;
        for (c, &uv) in combined.iter_mut().zip(u.data()) {
            *c += alpha * uv;
        }
    }
    Tensor::new(x.shape().to_vec(), combined).map_err(AttackError::from)
}

/// The subspace attack: bandit finite differences steered by prior gradients,
/// one uniformly chosen reference per iteration (coordinate mode) or a
/// Gaussian combination of all of them (full-subspace mode), with the drop
/// ratio climbing each iteration.
pub fn subspace_attack(
    x: &Tensor,
    label: usize,
    victim: &mut VictimOracle,
    refs: &[ReferenceOracle],
    cfg: &AttackConfig,
    rng: &mut impl Rng,
) -> Result<AttackResult> {
    subspace_attack_observed(x, label, victim, refs, cfg, rng, |_| {})
}

/// [`subspace_attack`] with a per-iteration observer hook.
#[allow(clippy::too_many_arguments)]
pub fn subspace_attack_observed(
    x: &Tensor,
    label: usize,
    victim: &mut VictimOracle,
    refs: &[ReferenceOracle],
    cfg: &AttackConfig,
    rng: &mut impl Rng,
    observer: impl FnMut(&StepTrace),
) -> Result<AttackResult> {
    if refs.is_empty() {
        return Err(AttackError::Config("no reference models".into()));
    }
    match cfg.mode {
        Mode::Coordinate => run_bandit_loop(
            x,
            label,
            victim,
            cfg,
            true,
            |state| {
                let i = choose_reference(refs.len(), rng);
                refs[i]
                    .prior_gradient(&state.x_adv, label, state.p, cfg.goal.loss_kind(), rng)
                    .map_err(AttackError::from)
            },
            observer,
        ),
        Mode::FullSubspace => run_bandit_loop(
            x,
            label,
            victim,
            cfg,
            true,
            |state| full_subspace_direction(refs, &state.x_adv, label, state.p, cfg.goal, rng),
            observer,
        ),
    }
}
