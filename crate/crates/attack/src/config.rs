use micronet::LossKind;
use oracle::ScoreKind;
use serde::{Deserialize, Serialize};

use crate::{AttackError, Result};

/// Attack goal: flip the prediction away from the label, or force a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Goal {
    #[default]
    Untargeted,
    Targeted(usize),
}

impl Goal {
    /// The adversarial objective this goal maximizes.
    pub fn loss_kind(self) -> LossKind {
        match self {
            Goal::Untargeted => LossKind::MarginUntargeted,
            Goal::Targeted(c) => LossKind::MarginTargeted(c),
        }
    }
}

/// Search-direction policy: one reference per iteration, or a Gaussian
/// combination of all prior gradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Coordinate,
    FullSubspace,
}

/// All hyper-parameters of the bandit subspace attack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackConfig {
    /// L-infinity perturbation radius.
    pub epsilon: f32,
    /// PGD step size.
    pub eta: f32,
    /// Estimator learning rate.
    pub eta_g: f32,
    /// Finite-difference probe step.
    pub delta: f32,
    /// Prior-mixing step.
    pub tau: f32,
    /// Maximum victim queries for one run.
    pub budget: u64,
    /// Initial drop ratio.
    pub p0: f64,
    /// Per-iteration drop-ratio increment.
    pub p_step: f64,
    /// Drop-ratio cap.
    pub p_max: f64,
    pub goal: Goal,
    pub mode: Mode,
    pub score_kind: ScoreKind,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            epsilon: 8.0 / 255.0,
            eta: 1.0 / 255.0,
            eta_g: 0.01,
            delta: 0.1,
            tau: 0.3,
            budget: 10_000,
            p0: 0.05,
            p_step: 0.01,
            p_max: 0.5,
            goal: Goal::Untargeted,
            mode: Mode::Coordinate,
            score_kind: ScoreKind::Logits,
        }
    }
}

impl AttackConfig {
    /// Targeted-attack defaults: same schedule, larger query allowance.
    pub fn targeted_default(target: usize) -> Self {
        Self {
            goal: Goal::Targeted(target),
            budget: 50_000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epsilon", self.epsilon),
            ("eta", self.eta),
            ("eta_g", self.eta_g),
            ("delta", self.delta),
            ("tau", self.tau),
        ];
        for (name, v) in positive {
            if v <= 0.0 || !v.is_finite() {
                return Err(AttackError::Config(format!("{name} = {v}, must be > 0")));
            }
        }
        if !(0.0 <= self.p0 && self.p0 <= self.p_max && self.p_max <= 1.0) {
            return Err(AttackError::Config(format!(
                "drop schedule needs 0 <= p0 <= p_max <= 1, got p0 {} p_max {}",
                self.p0, self.p_max
            )));
        }
        if self.p_step < 0.0 || !self.p_step.is_finite() {
            return Err(AttackError::Config(format!(
                "p_step {} must be >= 0",
                self.p_step
            )));
        }
        if self.budget < 2 {
            return Err(AttackError::Config(format!(
                "budget {} < 2 cannot fund a single probe pair",
                self.budget
            )));
        }
        Ok(())
    }
}
