use micronet::{
    argmax, forward, init_params, param_gradient, sample_drop, sgd_update, LossKind, NetworkSpec,
    ParameterSet,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Dataset, ModelError, Result};

/// Minibatch SGD settings with a step-decay learning-rate schedule.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f32,
    /// Learning rate is multiplied by `decay_factor` every `decay_every` epochs.
    pub decay_every: usize,
    pub decay_factor: f32,
    /// Weight-initialization seed (shuffling comes from the rng argument).
    pub init_seed: u64,
    /// Train-time drop-out ratio; 0 disables drop sampling.
    pub dropout: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 32,
            learning_rate: 0.1,
            decay_every: 5,
            decay_factor: 0.5,
            init_seed: 0,
            dropout: 0.0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(ModelError::InvalidConfig("batch_size must be > 0".into()));
        }
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(ModelError::InvalidConfig(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.decay_every == 0 || self.decay_factor <= 0.0 || !self.decay_factor.is_finite() {
            return Err(ModelError::InvalidConfig("bad decay schedule".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::InvalidConfig(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }
}

/// Per-epoch mean training loss, for divergence monitoring.
#[derive(Debug, Clone, Default)]
pub struct TrainReport {
    pub epoch_losses: Vec<f32>,
}

/// Trains with cross-entropy minibatch SGD. Deterministic given the config
/// and the rng seed; `epochs = 0` returns the freshly initialized parameters.
pub fn train(
    spec: &NetworkSpec,
    dataset: &Dataset,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(ParameterSet<f32>, TrainReport)> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    if dataset.image_shape() != spec.input_shape() {
        return Err(ModelError::InvalidDataset(format!(
            "dataset images {:?} vs spec input {:?}",
            dataset.image_shape(),
            spec.input_shape()
        )));
    }

    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.init_seed);
    let mut params = init_params(spec, &mut init_rng);
    let mut report = TrainReport::default();

    let mut order: Vec<usize> = (0..dataset.len()).collect();
    for epoch in 0..cfg.epochs {
        let lr = cfg.learning_rate * cfg.decay_factor.powi((epoch / cfg.decay_every) as i32);
        order.shuffle(rng);
        let mut epoch_loss = 0.0f64;
        for chunk in order.chunks(cfg.batch_size) {
            let mut batch_grad = params.zeros_like();
            for &i in chunk {
                let drop = if cfg.dropout > 0.0 {
                    Some(sample_drop(spec, cfg.dropout, rng)?)
                } else {
                    None
                };
                let logits = forward(spec, &params, &dataset.images[i], drop.as_ref())?;
                let loss = micronet::loss_value(logits.data(), dataset.labels[i], LossKind::CrossEntropy)?;
                epoch_loss += loss as f64;
                let grad = param_gradient(
                    spec,
                    &params,
                    &dataset.images[i],
                    dataset.labels[i],
                    LossKind::CrossEntropy,
                    drop.as_ref(),
                )?;
                batch_grad.add_scaled(&grad, 1.0 / chunk.len() as f32)?;
            }
            sgd_update(&mut params, &batch_grad, lr)?;
        }
        let mean_loss = (epoch_loss / dataset.len() as f64) as f32;
        if !mean_loss.is_finite() {
            return Err(ModelError::Diverged { epoch });
        }
        report.epoch_losses.push(mean_loss);
    }

    Ok((params, report))
}

/// Accuracy plus the indices of correctly classified samples.
pub fn evaluate(
    spec: &NetworkSpec,
    params: &ParameterSet<f32>,
    dataset: &Dataset,
) -> Result<(f32, Vec<usize>)> {
    if dataset.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let mut correct = Vec::new();
    for i in 0..dataset.len() {
        let logits = forward(spec, params, &dataset.images[i], None)?;
        if argmax(logits.data()) == dataset.labels[i] {
            correct.push(i);
        }
    }
    let acc = correct.len() as f32 / dataset.len() as f32;
    Ok((acc, correct))
}
