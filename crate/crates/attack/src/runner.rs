use micronet::Tensor;
use oracle::VictimOracle;

use crate::bandit::{bandit_step, next_drop_ratio, pgd_project};
use crate::loss::is_success;
use crate::{AttackConfig, AttackError, AttackResult, AttackState, FailureReason, Result};

/// Consecutive zero-query iterations tolerated before declaring a stall.
const STALL_LIMIT: u32 = 64;

/// Per-iteration view handed to observers (analysis/instrumentation hooks).
pub struct StepTrace<'a> {
    pub t: u64,
    /// Search direction used this iteration.
    pub u: &'a Tensor,
    /// Gradient estimate after the update.
    pub g: &'a [f32],
    /// Finite-difference scalar applied to `u` (before `eta_g`).
    pub coefficient: f32,
}

/// The shared bandit attack loop.
///
/// Per iteration: draw a search direction, spend two queries on the probe
/// pair, check both probe scores for success (a successful probe is returned
/// as the adversarial example), PGD-project, and advance the drop schedule.
/// Terminates when the remaining allowance cannot fund a probe pair.
pub fn run_bandit_loop(
    x: &Tensor,
    label: usize,
    victim: &mut VictimOracle,
    cfg: &AttackConfig,
    schedule_drop: bool,
    mut direction: impl FnMut(&AttackState) -> Result<Tensor>,
    mut observer: impl FnMut(&StepTrace),
) -> Result<AttackResult> {
    cfg.validate()?;
    if victim.score_kind() != cfg.score_kind {
        return Err(AttackError::Config(format!(
            "config expects {:?} scores, victim exposes {:?}",
            cfg.score_kind,
            victim.score_kind()
        )));
    }
    if x.shape() != victim.input_shape() {
        return Err(AttackError::Engine(micronet::Error::ShapeMismatch {
            context: "attack input",
            expected: victim.input_shape().to_vec(),
            got: x.shape().to_vec(),
        }));
    }
    if label >= victim.class_count() {
        return Err(AttackError::Config(format!(
            "label {label} out of range for {} classes",
            victim.class_count()
        )));
    }

    let mut state = AttackState::new(x.clone(), cfg.p0);
    let mut last_scores: Vec<f32> = Vec::new();
    let mut stalled_iterations = 0u32;

    let failure = |state: AttackState, last_scores: Vec<f32>, reason: FailureReason| AttackResult {
        success: false,
        queries_used: state.queries_used,
        iterations: state.t,
        x_adv: state.x_adv,
        final_scores: last_scores,
        failure_reason: Some(reason),
    };

    loop {
        let victim_remaining = victim.remaining_budget().unwrap_or(u64::MAX);
        let own_remaining = cfg.budget - state.queries_used;
        if victim_remaining.min(own_remaining) < 2 {
            return Ok(failure(state, last_scores, FailureReason::Budget));
        }

        let u = direction(&state)?;
        let outcome = bandit_step(&mut state, victim, &u, cfg, label)?;
        state.t += 1;
        observer(&StepTrace {
            t: state.t,
            u: &u,
            g: &state.g,
            coefficient: outcome.coefficient,
        });

        for probe in [outcome.plus, outcome.minus].into_iter().flatten() {
            let (point, scores) = probe;
            let won = is_success(&scores, label, cfg.goal);
            last_scores = scores;
            if won {
                return Ok(AttackResult {
                    success: true,
                    queries_used: state.queries_used,
                    iterations: state.t,
                    x_adv: point,
                    final_scores: last_scores,
                    failure_reason: None,
                });
            }
        }

        if outcome.queries == 0 {
            stalled_iterations += 1;
            if stalled_iterations >= STALL_LIMIT {
                return Ok(failure(state, last_scores, FailureReason::Stalled));
            }
        } else {
            stalled_iterations = 0;
        }

        pgd_project(x, &mut state, cfg);
        if schedule_drop {
            state.p = next_drop_ratio(state.p, cfg);
        }
    }
}
