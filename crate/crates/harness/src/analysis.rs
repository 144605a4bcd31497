//! White-box gradient-subspace analyses. These read victim parameters
//! directly: they quantify alignment, they are not attacks.

use micronet::{input_gradient, LossKind, NetworkSpec, ParameterSet, Tensor};
use models::Dataset;
use oracle::ReferenceOracle;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{HarnessError, Result};

/// Squared norm of the normalized gradient's component outside the span of
/// the given vectors (orthonormalized here, near-dependent vectors dropped).
/// 0 means fully captured, 1 means orthogonal.
pub fn projection_residual(gradient: &Tensor, basis_vectors: &[Vec<f32>]) -> Result<f64> {
    let norm = gradient
        .data()
        .iter()
        .map(|&v| (v as f64).powi(2))
        .sum::<f64>()
        .sqrt();
    if norm == 0.0 {
        return Err(HarnessError::Plan("zero gradient has no direction".into()));
    }
    let unit: Vec<f64> = gradient.data().iter().map(|&v| v as f64 / norm).collect();

    // Gram-Schmidt over the basis, dropping near-dependent vectors.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in basis_vectors {
        if v.len() != unit.len() {
            return Err(HarnessError::Plan(format!(
                "basis vector of length {} against gradient of length {}",
                v.len(),
                unit.len()
            )));
        }
        let mut b: Vec<f64> = v.iter().map(|&x| x as f64).collect();
        let original: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if original == 0.0 {
            continue;
        }
        for q in &basis {
            let dot: f64 = b.iter().zip(q).map(|(a, c)| a * c).sum();
            for (bv, qv) in b.iter_mut().zip(q) {
                *bv -= dot * qv;
            }
        }
        let remaining: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if remaining < 1e-7 * original.max(1.0) {
            continue;
        }
        for bv in b.iter_mut() {
            *bv /= remaining;
        }
        basis.push(b);
    }

    let mut residual = unit;
    for q in &basis {
        let dot: f64 = residual.iter().zip(q).map(|(a, c)| a * c).sum();
        for (rv, qv) in residual.iter_mut().zip(q) {
            *rv -= dot * qv;
        }
    }
    let sq: f64 = residual.iter().map(|x| x * x).sum();
    Ok(sq.clamp(0.0, 1.0))
}

/// One row of the residual sweep: mean residuals of the true victim gradient
/// against the first `k` prior gradients vs `k` random directions.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualRow {
    pub k: usize,
    pub prior_residual: f64,
    pub random_residual: f64,
}

/// Per image: victim gradient residual against nested prior-gradient bases
/// (references in the given order, fresh drop samples at `ratio`) and nested
/// random-direction bases, for k = 1..=refs.len(). Emits means over images.
#[allow(clippy::too_many_arguments)]
pub fn residual_sweep(
    victim_spec: &NetworkSpec,
    victim_params: &ParameterSet<f32>,
    refs: &[ReferenceOracle],
    dataset: &Dataset,
    images: &[usize],
    ratio: f64,
    rng: &mut impl Rng,
) -> Result<Vec<ResidualRow>> {
    if refs.is_empty() || images.is_empty() {
        return Err(HarnessError::Plan(
            "residual sweep needs references and images".into(),
        ));
    }
    let n = victim_spec.input_dim();
    let m = refs.len();
    let mut prior_sums = vec![0.0f64; m];
    let mut random_sums = vec![0.0f64; m];
    let mut counted = 0usize;

    for &idx in images {
        let x = &dataset.images[idx];
        let y = dataset.labels[idx];
        let true_grad = input_gradient(
            victim_spec,
            victim_params,
            x,
            y,
            LossKind::MarginUntargeted,
            None,
        )?;
        if true_grad.data().iter().all(|&v| v == 0.0) {
            continue;
        }
        counted += 1;

        let priors: Vec<Vec<f32>> = refs
            .iter()
            .map(|r| {
                r.prior_gradient(x, y, ratio, LossKind::MarginUntargeted, rng)
                    .map(|t| t.into_data())
            })
            .collect::<std::result::Result<_, _>>()?;
        let randoms: Vec<Vec<f32>> = (0..m)
            .map(|_| {
                (0..n)
                    .map(|_| <StandardNormal as Distribution<f32>>::sample(&StandardNormal, rng))
                    .collect()
            })
            .collect();

        for k in 1..=m {
            prior_sums[k - 1] += projection_residual(&true_grad, &priors[..k])?;
            random_sums[k - 1] += projection_residual(&true_grad, &randoms[..k])?;
        }
    }
    if counted == 0 {
        return Err(HarnessError::NoAttackableImages);
    }

    Ok((1..=m)
        .map(|k| ResidualRow {
            k,
            prior_residual: prior_sums[k - 1] / counted as f64,
            random_residual: random_sums[k - 1] / counted as f64,
        })
        .collect())
}
