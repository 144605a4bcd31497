use attack::{is_success, pgd_project, probe_loss, AttackConfig, AttackResult, AttackState, FailureReason};
use micronet::Tensor;
use oracle::{OracleError, VictimOracle};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{BaselineError, Result};

/// NES estimator settings; shared attack fields (epsilon, eta, budget, goal,
/// score kind) ride along in `attack`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NesConfig {
    /// Antithetic pairs per estimate; each estimate costs `2 * samples` queries.
    pub samples: usize,
    /// Gaussian smoothing radius.
    pub sigma: f32,
    /// Mirrored sampling; the estimator is defined antithetic.
    pub antithetic: bool,
    pub attack: AttackConfig,
}

impl Default for NesConfig {
    fn default() -> Self {
        Self {
            samples: 25,
            sigma: 0.01,
            antithetic: true,
            attack: AttackConfig::default(),
        }
    }
}

impl NesConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(BaselineError::Config("samples must be >= 1".into()));
        }
        if self.sigma <= 0.0 || !self.sigma.is_finite() {
            return Err(BaselineError::Config(format!(
                "sigma {} must be > 0",
                self.sigma
            )));
        }
        if !self.antithetic {
            return Err(BaselineError::Config(
                "the estimator is antithetic by definition".into(),
            ));
        }
        self.attack.validate()?;
        Ok(())
    }
}

/// One NES gradient estimate plus the probe bookkeeping the attack loop needs.
#[derive(Debug, Clone)]
pub struct NesEstimate {
    pub gradient: Tensor,
    /// First probe that already satisfied the goal, if any.
    pub success_probe: Option<(Tensor, Vec<f32>)>,
    /// Scores of the last probe issued.
    pub last_scores: Vec<f32>,
    pub queries: u64,
}

/// Antithetic NES estimate at `x`:
/// `g = 1/(2*samples*sigma) * sum_j [L(x + sigma v_j) - L(x - sigma v_j)] v_j`
/// with `v_j ~ N(0, I)`. Issues exactly `2 * samples` queries; probes are
/// clipped to the epsilon ball (when given) and the pixel range first.
pub fn nes_gradient(
    victim: &mut VictimOracle,
    x: &Tensor,
    label: usize,
    cfg: &NesConfig,
    ball: Option<(&Tensor, f32)>,
    rng: &mut impl Rng,
) -> Result<NesEstimate> {
    cfg.validate()?;
    let needed = 2 * cfg.samples as u64;
    if let Some(remaining) = victim.remaining_budget() {
        if remaining < needed {
            return Err(BaselineError::Oracle(OracleError::BudgetExhausted {
                used: victim.query_count(),
            }));
        }
    }

    let n = x.numel();
    let mut grad = vec![0.0f32; n];
    let mut success_probe: Option<(Tensor, Vec<f32>)> = None;
    let mut last_scores: Vec<f32> = Vec::new();
    let mut queries = 0u64;

    for _ in 0..cfg.samples {
        let v: Vec<f32> = (0..n)
            .map(|_| <StandardNormal as Distribution<f32>>::sample(&StandardNormal, rng))
            .collect();

        let mut losses = [0.0f32; 2];
        for (slot, sign) in [(0usize, 1.0f32), (1, -1.0)] {
            let mut point: Vec<f32> = x
                .data()
                .iter()
                .zip(&v)
                .map(|(&xv, &vv)| xv + sign * cfg.sigma * vv)
                .collect();
            if let Some((origin, eps)) = ball {
                for (p, &o) in point.iter_mut().zip(origin.data()) {
                    *p = p.clamp(o - eps, o + eps);
                }
            }
            for p in point.iter_mut() {
                *p = p.clamp(0.0, 1.0);
            }
            let point = Tensor::new(x.shape().to_vec(), point).expect("probe shape");
            let scores = victim.query(&point)?;
            queries += 1;
            losses[slot] = probe_loss(&scores, cfg.attack.score_kind, label, cfg.attack.goal)?;
            if success_probe.is_none() && is_success(&scores, label, cfg.attack.goal) {
                success_probe = Some((point, scores.clone()));
            }
            last_scores = scores;
        }

        let weight = losses[0] - losses[1];
        for (g, &vv) in grad.iter_mut().zip(&v) {
            *g += weight * vv;
        }
    }

    let scale = 1.0 / (2.0 * cfg.samples as f32 * cfg.sigma);
    for g in grad.iter_mut() {
        *g *= scale;
    }

    Ok(NesEstimate {
        gradient: Tensor::new(x.shape().to_vec(), grad).expect("gradient shape"),
        success_probe,
        last_scores,
        queries,
    })
}

/// PGD driven by NES estimates; same projection, success detection, and
/// result contract as the bandit attacks. Queries per iteration:
/// `2 * samples`, with success read off the probe scores.
pub fn nes_attack(
    x: &Tensor,
    label: usize,
    victim: &mut VictimOracle,
    cfg: &NesConfig,
    rng: &mut impl Rng,
) -> Result<AttackResult> {
    cfg.validate()?;
    if x.shape() != victim.input_shape() {
        return Err(BaselineError::Engine(micronet::Error::ShapeMismatch {
            context: "attack input",
            expected: victim.input_shape().to_vec(),
            got: x.shape().to_vec(),
        }));
    }

    let acfg = &cfg.attack;
    let needed = 2 * cfg.samples as u64;
    let mut state = AttackState::new(x.clone(), acfg.p0);
    let mut last_scores: Vec<f32> = Vec::new();

    loop {
        let victim_remaining = victim.remaining_budget().unwrap_or(u64::MAX);
        let own_remaining = acfg.budget - state.queries_used;
        if victim_remaining.min(own_remaining) < needed {
            return Ok(AttackResult {
                success: false,
                queries_used: state.queries_used,
                iterations: state.t,
                x_adv: state.x_adv,
                final_scores: last_scores,
                failure_reason: Some(FailureReason::Budget),
            });
        }

        let estimate = nes_gradient(victim, &state.x_adv, label, cfg, Some((x, acfg.epsilon)), rng)?;
        state.queries_used += estimate.queries;
        state.t += 1;

        if let Some((point, scores)) = estimate.success_probe {
            return Ok(AttackResult {
                success: true,
                queries_used: state.queries_used,
                iterations: state.t,
                x_adv: point,
                final_scores: scores,
                failure_reason: None,
            });
        }

        state.g.copy_from_slice(estimate.gradient.data());
        last_scores = estimate.last_scores;
        pgd_project(x, &mut state, acfg);
    }
}
