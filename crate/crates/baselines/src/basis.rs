use micronet::Tensor;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{BaselineError, Result};

/// `m <= n` orthonormal vectors spanning a random subspace of `R^n`.
#[derive(Debug, Clone)]
pub struct OrthonormalBasis {
    vectors: Vec<Vec<f32>>,
    ambient: usize,
}

impl OrthonormalBasis {
    pub fn vectors(&self) -> &[Vec<f32>] {
        &self.vectors
    }

    /// Subspace dimension `m`.
    pub fn dimension(&self) -> usize {
        self.vectors.len()
    }

    /// Ambient dimension `n`.
    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    /// First `m` vectors as a nested sub-basis.
    pub fn prefix(&self, m: usize) -> OrthonormalBasis {
        assert!(m >= 1 && m <= self.vectors.len());
        OrthonormalBasis {
            vectors: self.vectors[..m].to_vec(),
            ambient: self.ambient,
        }
    }
}

/// Draws i.i.d. Gaussian vectors and orthonormalizes them sequentially
/// (modified Gram-Schmidt, accumulation in f64), redrawing any vector that
/// comes out nearly dependent.
pub fn random_orthonormal_basis(
    n: usize,
    m: usize,
    rng: &mut impl Rng,
) -> Result<OrthonormalBasis> {
    if m == 0 || m > n {
        return Err(BaselineError::Config(format!(
            "basis dimension {m} outside 1..={n}"
        )));
    }
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut attempts = 0usize;
    while vectors.len() < m {
        attempts += 1;
        if attempts > m + 1000 {
            return Err(BaselineError::Config(
                "orthonormalization kept redrawing; dimensions exhausted".into(),
            ));
        }
        let mut v: Vec<f64> = (0..n)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
            .collect();
        for b in &vectors {
            let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            for (vv, bv) in v.iter_mut().zip(b) {
                *vv -= dot * bv;
            }
        }
        let norm: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        // A fresh Gaussian has norm ~ sqrt(n); near-dependence shows up as
        // a collapsed residual.
        if norm < 1e-6 * (n as f64).sqrt() {
            continue;
        }
        for vv in v.iter_mut() {
            *vv /= norm;
        }
        vectors.push(v);
    }
    Ok(OrthonormalBasis {
        vectors: vectors
            .into_iter()
            .map(|v| v.into_iter().map(|a| a as f32).collect())
            .collect(),
        ambient: n,
    })
}

/// Random direction inside the spanned subspace:
/// `u' = sum_i alpha_i u_i`, `alpha_i ~ N(0, 1)`.
pub fn gaussian_combination(basis: &OrthonormalBasis, rng: &mut impl Rng) -> Tensor {
    let mut out = vec![0.0f32; basis.ambient_dim()];
    for b in basis.vectors() {
        let alpha: f32 = StandardNormal.sample(rng);
        for (o, &bv) in out.iter_mut().zip(b) {
            *o += alpha * bv;
        }
    }
    Tensor::from_vec(out)
}
