use attack::{is_success, AttackConfig, AttackResult};
use micronet::Tensor;
use oracle::{ReferenceOracle, VictimOracle};
use rand::Rng;

use crate::{BaselineError, Result};

/// Pure transfer attack: white-box PGD maximizing the mean hinge loss over
/// the reference ensemble (no drop sampling, no victim queries during
/// optimization), then a single victim query to decide success.
/// `queries_used` is always 1.
pub fn transfer_attack(
    x: &Tensor,
    label: usize,
    refs: &[ReferenceOracle],
    victim: &mut VictimOracle,
    cfg: &AttackConfig,
    steps: usize,
    rng: &mut impl Rng,
) -> Result<AttackResult> {
    cfg.validate()?;
    if refs.is_empty() {
        return Err(BaselineError::Config("no reference models".into()));
    }
    if steps == 0 {
        return Err(BaselineError::Config("steps must be >= 1".into()));
    }

    let n = x.numel();
    let mut adv = x.clone();
    for _ in 0..steps {
        let mut mean_grad = vec![0.0f32; n];
        for reference in refs {
            let u = reference.prior_gradient(&adv, label, 0.0, cfg.goal.loss_kind(), rng)?;
            for (m, &uv) in mean_grad.iter_mut().zip(u.data()) {
                *m += uv / refs.len() as f32;
            }
        }
        for ((v, &g), &xv) in adv.data_mut().iter_mut().zip(&mean_grad).zip(x.data()) {
            let sign = if g > 0.0 {
                1.0
            } else if g < 0.0 {
                -1.0
            } else {
                0.0
            };
            *v = (*v + cfg.eta * sign)
                .clamp(xv - cfg.epsilon, xv + cfg.epsilon)
                .clamp(0.0, 1.0);
        }
    }

    let scores = victim.query(&adv)?;
    let success = is_success(&scores, label, cfg.goal);
    Ok(AttackResult {
        success,
        queries_used: 1,
        iterations: steps as u64,
        x_adv: adv,
        final_scores: scores,
        failure_reason: None,
    })
}
