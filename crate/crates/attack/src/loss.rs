use micronet::{argmax, loss_value};
use oracle::ScoreKind;

use crate::{AttackError, Goal, Result};

/// Hinge logit-diff adversarial loss on a score vector (to be maximized).
///
/// Untargeted: `max_{i != y} s_i - s_y`; targeted `c`: `s_c - max_{i != c} s_i`.
/// No hinge clamp: the attack loop halts at first success, so capping
/// post-success growth is unnecessary.
pub fn cw_hinge_loss(scores: &[f32], label: usize, goal: Goal) -> Result<f32> {
    if scores.len() < 2 {
        return Err(AttackError::Config(format!(
            "{} scores, need at least 2 classes",
            scores.len()
        )));
    }
    loss_value(scores, label, goal.loss_kind()).map_err(AttackError::from)
}

/// Goal test on a score vector; argmax ties break toward the lowest index.
pub fn is_success(scores: &[f32], label: usize, goal: Goal) -> bool {
    let predicted = argmax(scores);
    match goal {
        Goal::Untargeted => predicted != label,
        Goal::Targeted(c) => predicted == c,
    }
}

/// Adversarial loss of a probe's scores as the estimator sees it.
///
/// With a probability-exposing victim the same hinge is computed on
/// log-probabilities, which recovers logit differences exactly.
pub fn probe_loss(scores: &[f32], score_kind: ScoreKind, label: usize, goal: Goal) -> Result<f32> {
    match score_kind {
        ScoreKind::Logits => cw_hinge_loss(scores, label, goal),
        ScoreKind::Probabilities => {
            let logs: Vec<f32> = scores.iter().map(|&p| p.max(1e-38).ln()).collect();
            cw_hinge_loss(&logs, label, goal)
        }
    }
}
