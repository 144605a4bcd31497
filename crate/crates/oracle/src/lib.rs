//! The black-box boundary.
//!
//! [`VictimOracle`] hides a model behind a score-only, query-counted,
//! budget-enforced interface; attack code can reach nothing but [`VictimOracle::query`].
//! [`ReferenceOracle`] wraps an attacker-owned model and hands out input
//! gradients ("prior gradients") under drop-out/drop-layer sampling.

use std::sync::Arc;

use micronet::{forward, input_gradient, sample_drop, LossKind, NetworkSpec, ParameterSet, Tensor};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("query budget exhausted after {used} queries")]
    BudgetExhausted { used: u64 },

    #[error(transparent)]
    Engine(#[from] micronet::Error),

    #[error("pixel {index} = {value} outside [0, 1]")]
    PixelRange { index: usize, value: f32 },
}

pub type Result<T> = std::result::Result<T, OracleError>;

/// What the victim exposes per query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreKind {
    #[default]
    Logits,
    Probabilities,
}

/// Query allowance for one attack run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    Limited(u64),
    Unlimited,
}

/// Slack for float round-off when validating query pixels.
const PIXEL_SLACK: f32 = 1e-5;

/// A victim model behind the score-only interface.
///
/// The wrapped spec and parameters are private; there is deliberately no way
/// to reach them or their gradients from this type:
///
/// ```compile_fail
/// # use oracle::{VictimOracle, ScoreKind, Budget};
/// fn leak(v: &VictimOracle) {
///     let _ = &v.params; // private field
/// }
/// ```
#[derive(Debug, Clone)]
pub struct VictimOracle {
    spec: Arc<NetworkSpec>,
    params: Arc<ParameterSet<f32>>,
    score_kind: ScoreKind,
    budget: Budget,
    query_count: u64,
}

impl VictimOracle {
    pub fn new(
        spec: Arc<NetworkSpec>,
        params: Arc<ParameterSet<f32>>,
        score_kind: ScoreKind,
        budget: Budget,
    ) -> Result<Self> {
        params.validate_against(&spec)?;
        Ok(Self {
            spec,
            params,
            score_kind,
            budget,
            query_count: 0,
        })
    }

    /// One metered forward pass. Returns logits or softmax probabilities
    /// according to [`ScoreKind`]; the counter advances by exactly one.
    pub fn query(&mut self, x: &Tensor) -> Result<Vec<f32>> {
        if let Budget::Limited(b) = self.budget {
            if self.query_count >= b {
                return Err(OracleError::BudgetExhausted {
                    used: self.query_count,
                });
            }
        }
        for (i, &v) in x.data().iter().enumerate() {
            if !(-PIXEL_SLACK..=1.0 + PIXEL_SLACK).contains(&v) {
                return Err(OracleError::PixelRange { index: i, value: v });
            }
        }
        let logits = forward(&self.spec, &self.params, x, None)?;
        self.query_count += 1;
        let scores = match self.score_kind {
            ScoreKind::Logits => logits.into_data(),
            ScoreKind::Probabilities => softmax(logits.data()),
        };
        Ok(scores)
    }

    pub fn query_count(&self) -> u64 {
        self.query_count
    }

    pub fn budget(&self) -> Budget {
        self.budget
    }

    /// Remaining allowance; `None` is the unlimited sentinel.
    pub fn remaining_budget(&self) -> Option<u64> {
        match self.budget {
            Budget::Limited(b) => Some(b - self.query_count),
            Budget::Unlimited => None,
        }
    }

    pub fn score_kind(&self) -> ScoreKind {
        self.score_kind
    }

    pub fn class_count(&self) -> usize {
        self.spec.class_count()
    }

    pub fn input_shape(&self) -> &[usize] {
        self.spec.input_shape()
    }
}

fn softmax(logits: &[f32]) -> Vec<f32> {
    let max = logits.iter().fold(f32::NEG_INFINITY, |a, &b| a.max(b));
    let exps: Vec<f32> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f32 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// An attacker-owned white-box model used as a prior-gradient source.
#[derive(Debug, Clone)]
pub struct ReferenceOracle {
    spec: Arc<NetworkSpec>,
    params: Arc<ParameterSet<f32>>,
    model_index: usize,
    droppable: bool,
}

impl ReferenceOracle {
    pub fn new(
        spec: Arc<NetworkSpec>,
        params: Arc<ParameterSet<f32>>,
        model_index: usize,
    ) -> Result<Self> {
        params.validate_against(&spec)?;
        let droppable = spec.droppable_block_count() > 0;
        Ok(Self {
            spec,
            params,
            model_index,
            droppable,
        })
    }

    /// Prior gradient `u = dL(f_i(x, p-dropped), y)/dx` under a freshly
    /// sampled drop configuration. Not normalized.
    pub fn prior_gradient(
        &self,
        x: &Tensor,
        label: usize,
        ratio: f64,
        loss: LossKind,
        rng: &mut impl Rng,
    ) -> Result<Tensor> {
        let drop = sample_drop::<f32>(&self.spec, ratio, rng)?;
        let grad = input_gradient(&self.spec, &self.params, x, label, loss, Some(&drop))?;
        Ok(grad)
    }

    pub fn model_index(&self) -> usize {
        self.model_index
    }

    /// Whether drop-layer sampling applies (the model has droppable blocks).
    pub fn droppable(&self) -> bool {
        self.droppable
    }

    pub fn input_shape(&self) -> &[usize] {
        self.spec.input_shape()
    }

    pub fn class_count(&self) -> usize {
        self.spec.class_count()
    }
}
