use micronet::Tensor;
use oracle::VictimOracle;

use crate::loss::probe_loss;
use crate::{AttackConfig, AttackState, Result};

/// What one bandit step produced: the clipped probe points with their scores
/// (absent for a degenerate zero-direction side) and the scalar that, times
/// the prior gradient, updated the estimate.
#[derive(Debug, Clone)]
pub struct ProbeOutcome {
    pub plus: Option<(Tensor, Vec<f32>)>,
    pub minus: Option<(Tensor, Vec<f32>)>,
    pub queries: u8,
    pub coefficient: f32,
}

fn clip_to_ball(point: &mut [f32], origin: &[f32], epsilon: f32) {
    for (v, &x) in point.iter_mut().zip(origin) {
        *v = v.clamp(x - epsilon, x + epsilon).clamp(0.0, 1.0);
    }
}

fn l2_norm(v: &[f32]) -> f32 {
    v.iter().map(|&a| a * a).sum::<f32>().sqrt()
}

/// One two-query finite-difference update of the gradient estimate along the
/// prior direction `u`:
///
/// `g+- = g +- tau*u`, probes at `x_adv + delta * g+-'` (normalized, clipped
/// into the epsilon ball and `[0, 1]` before querying), then
/// `g += eta_g * (L+ - L-) / (tau * delta) * u`.
///
/// A side with a zero-norm direction is skipped and its loss treated as equal
/// to the other side's; only issued queries are counted.
pub fn bandit_step(
    state: &mut AttackState,
    victim: &mut VictimOracle,
    u: &Tensor,
    cfg: &AttackConfig,
    label: usize,
) -> Result<ProbeOutcome> {
    let n = state.g.len();
    debug_assert_eq!(u.numel(), n);

    let mut probe_for = |sign: f32, state_g: &[f32], queries: &mut u8| -> Result<Option<(Tensor, Vec<f32>, f32)>> {
        let direction: Vec<f32> = state_g
            .iter()
            .zip(u.data())
            .map(|(&g, &uv)| g + sign * cfg.tau * uv)
            .collect();
        let norm = l2_norm(&direction);
        if norm == 0.0 {
            return Ok(None);
        }
        let mut point = state.x_adv.data().to_vec();
        for (p, d) in point.iter_mut().zip(&direction) {
            *p += cfg.delta * d / norm;
        }
        clip_to_ball(&mut point, state.origin.data(), cfg.epsilon);
        let point = Tensor::new(state.x_adv.shape().to_vec(), point).expect("probe shape");
        let scores = victim.query(&point)?;
        *queries += 1;
        let loss = probe_loss(&scores, cfg.score_kind, label, cfg.goal)?;
        Ok(Some((point, scores, loss)))
    };

    let mut queries = 0u8;
    let plus = probe_for(1.0, &state.g, &mut queries)?;
    let minus = probe_for(-1.0, &state.g, &mut queries)?;

    let coefficient = match (&plus, &minus) {
        (Some((_, _, lp)), Some((_, _, lm))) => (lp - lm) / (cfg.tau * cfg.delta),
        // One-sided or fully degenerate: treat the missing loss as equal.
        _ => 0.0,
    };

    for (g, &uv) in state.g.iter_mut().zip(u.data()) {
        *g += cfg.eta_g * coefficient * uv;
    }
    state.queries_used += queries as u64;

    Ok(ProbeOutcome {
        plus: plus.map(|(p, s, _)| (p, s)),
        minus: minus.map(|(p, s, _)| (p, s)),
        queries,
        coefficient,
    })
}

/// Signed-gradient PGD step followed by projection into the epsilon ball and
/// the valid pixel range. `sign(0) = 0`.
pub fn pgd_project(origin: &Tensor, state: &mut AttackState, cfg: &AttackConfig) {
    let adv = state.x_adv.data_mut();
    for ((v, &g), &x) in adv.iter_mut().zip(&state.g).zip(origin.data()) {
        let sign = if g > 0.0 {
            1.0
        } else if g < 0.0 {
            -1.0
        } else {
            0.0
        };
        *v = (*v + cfg.eta * sign)
            .clamp(x - cfg.epsilon, x + cfg.epsilon)
            .clamp(0.0, 1.0);
    }
}

/// Drop-ratio schedule: climb by `p_step` per iteration up to `p_max`.
pub fn next_drop_ratio(p: f64, cfg: &AttackConfig) -> f64 {
    (p + cfg.p_step).min(cfg.p_max)
}
