use micronet::Tensor;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{ModelError, Result};

/// Labeled image collection. Pixels live in `[0, 1]`; every sample carries a
/// stable identity so split disjointness can be audited.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub images: Vec<Tensor>,
    pub labels: Vec<usize>,
    pub ids: Vec<u64>,
    pub split_id: String,
    pub class_count: usize,
}

impl Dataset {
    pub fn new(
        images: Vec<Tensor>,
        labels: Vec<usize>,
        ids: Vec<u64>,
        split_id: impl Into<String>,
        class_count: usize,
    ) -> Result<Self> {
        if images.len() != labels.len() || images.len() != ids.len() {
            return Err(ModelError::InvalidDataset(format!(
                "{} images, {} labels, {} ids",
                images.len(),
                labels.len(),
                ids.len()
            )));
        }
        for (i, img) in images.iter().enumerate() {
            if !img.data().iter().all(|&v| (0.0..=1.0).contains(&v)) {
                return Err(ModelError::InvalidDataset(format!(
                    "image {i} has pixels outside [0, 1]"
                )));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(ModelError::InvalidDataset(format!(
                "label {bad} >= class count {class_count}"
            )));
        }
        Ok(Self {
            images,
            labels,
            ids,
            split_id: split_id.into(),
            class_count,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn image_shape(&self) -> &[usize] {
        self.images[0].shape()
    }

    fn subset(&self, indices: &[usize], split_id: &str) -> Dataset {
        Dataset {
            images: indices.iter().map(|&i| self.images[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            ids: indices.iter().map(|&i| self.ids[i]).collect(),
            split_id: split_id.to_string(),
            class_count: self.class_count,
        }
    }
}

/// Parameters of the seeded synthetic task.
///
/// Each class owns a smooth low-frequency prototype; samples add a smooth
/// per-sample deformation plus pixel noise. `class_spread` controls class
/// separation, `sample_jitter`/`pixel_noise` control within-class variation,
/// so margin difficulty is tunable.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub side: usize,
    pub count: usize,
    pub seed: u64,
    #[serde(default = "default_spread")]
    pub class_spread: f32,
    #[serde(default = "default_jitter")]
    pub sample_jitter: f32,
    #[serde(default = "default_noise")]
    pub pixel_noise: f32,
}

fn default_spread() -> f32 {
    0.18
}
fn default_jitter() -> f32 {
    0.30
}
fn default_noise() -> f32 {
    0.07
}

impl SyntheticSpec {
    pub fn new(classes: usize, side: usize, count: usize, seed: u64) -> Self {
        Self {
            classes,
            side,
            count,
            seed,
            class_spread: default_spread(),
            sample_jitter: default_jitter(),
            pixel_noise: default_noise(),
        }
    }
}

/// Smooth field: a coarse Gaussian grid bilinearly upsampled to `side`.
fn smooth_field(side: usize, grid: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let coarse: Vec<f32> = (0..grid * grid).map(|_| standard_normal(rng)).collect();
    let mut out = vec![0.0f32; side * side];
    let scale = (grid - 1) as f32 / (side - 1) as f32;
    for y in 0..side {
        for x in 0..side {
            let fy = y as f32 * scale;
            let fx = x as f32 * scale;
            let y0 = (fy as usize).min(grid - 2);
            let x0 = (fx as usize).min(grid - 2);
            let ty = fy - y0 as f32;
            let tx = fx - x0 as f32;
            let v00 = coarse[y0 * grid + x0];
            let v01 = coarse[y0 * grid + x0 + 1];
            let v10 = coarse[(y0 + 1) * grid + x0];
            let v11 = coarse[(y0 + 1) * grid + x0 + 1];
            out[y * side + x] = v00 * (1.0 - ty) * (1.0 - tx)
                + v01 * (1.0 - ty) * tx
                + v10 * ty * (1.0 - tx)
                + v11 * ty * tx;
        }
    }
    out
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f32 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    ((-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()) as f32
}

/// Generates the full synthetic dataset; samples are assigned round-robin to
/// classes so class counts are balanced.
///
/// Class prototypes live on a coarse (4x4-upsampled) band while per-sample
/// deformations come from a finer (8x8) band, so the discriminative signal
/// occupies a low-dimensional smooth subspace the nuisance only partially
/// overlaps. Classifiers of any architecture then rely on the shared coarse
/// structure, the condition the gradient-transfer experiments assume.
pub fn synthetic_dataset(spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.classes < 2 || spec.side < 8 || spec.count == 0 {
        return Err(ModelError::InvalidDataset(format!(
            "bad synthetic spec: {spec:?}"
        )));
    }
    let side = spec.side;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let protos: Vec<Vec<f32>> = (0..spec.classes)
        .map(|_| smooth_field(side, 4, &mut rng))
        .collect();

    // The finer band needs enough resolution to be distinct from the coarse one.
    let deform_grid = if side >= 16 { 8 } else { 4 };
    let mut images = Vec::with_capacity(spec.count);
    let mut labels = Vec::with_capacity(spec.count);
    for i in 0..spec.count {
        let class = i % spec.classes;
        let deform = smooth_field(side, deform_grid, &mut rng);
        let data: Vec<f32> = (0..side * side)
            .map(|p| {
                let v = 0.5
                    + spec.class_spread * protos[class][p]
                    + spec.sample_jitter * deform[p]
                    + spec.pixel_noise * standard_normal(&mut rng);
                v.clamp(0.0, 1.0)
            })
            .collect();
        images.push(Tensor::new(vec![side, side, 1], data).expect("image shape"));
        labels.push(class);
    }
    let ids = (0..spec.count as u64).collect();
    Dataset::new(images, labels, ids, "synthetic-full", spec.classes)
}

/// The standard disjoint split plan.
#[derive(Debug, Clone)]
pub struct SplitPlan {
    pub victim_train: Dataset,
    pub reference_train: Dataset,
    pub attack_eval: Dataset,
}

impl SplitPlan {
    /// True when no sample identity appears in more than one split.
    pub fn is_disjoint(&self) -> bool {
        let total = self.victim_train.len() + self.reference_train.len() + self.attack_eval.len();
        let distinct: std::collections::HashSet<u64> = self
            .victim_train
            .ids
            .iter()
            .chain(&self.reference_train.ids)
            .chain(&self.attack_eval.ids)
            .copied()
            .collect();
        distinct.len() == total
    }
}

/// Partitions a dataset into the victim-train / reference-train / attack-eval
/// splits by a seeded shuffle. Splits are pairwise disjoint by construction.
pub fn standard_splits(
    full: &Dataset,
    victim_train: usize,
    reference_train: usize,
    attack_eval: usize,
    seed: u64,
) -> Result<SplitPlan> {
    let need = victim_train + reference_train + attack_eval;
    if need > full.len() {
        return Err(ModelError::InvalidDataset(format!(
            "splits need {need} samples, dataset has {}",
            full.len()
        )));
    }
    if victim_train == 0 || reference_train == 0 || attack_eval == 0 {
        return Err(ModelError::InvalidDataset(
            "all three splits must be non-empty".into(),
        ));
    }
    let mut indices: Vec<usize> = (0..full.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let plan = SplitPlan {
        victim_train: full.subset(&indices[..victim_train], "victim-train"),
        reference_train: full.subset(
            &indices[victim_train..victim_train + reference_train],
            "reference-train",
        ),
        attack_eval: full.subset(
            &indices[victim_train + reference_train..need],
            "attack-eval",
        ),
    };
    debug_assert!(plan.is_disjoint());
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_pixels_in_range_and_balanced() {
        let spec = SyntheticSpec::new(4, 12, 40, 3);
        let ds = synthetic_dataset(&spec).unwrap();
        assert_eq!(ds.len(), 40);
        for img in &ds.images {
            assert!(img.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
        for c in 0..4 {
            assert_eq!(ds.labels.iter().filter(|&&l| l == c).count(), 10);
        }
    }

    #[test]
    fn synthetic_is_seed_deterministic() {
        let spec = SyntheticSpec::new(3, 10, 12, 9);
        let a = synthetic_dataset(&spec).unwrap();
        let b = synthetic_dataset(&spec).unwrap();
        for (x, y) in a.images.iter().zip(&b.images) {
            assert_eq!(x.data(), y.data());
        }
    }

    #[test]
    fn splits_are_disjoint_and_sized() {
        let spec = SyntheticSpec::new(3, 10, 50, 1);
        let ds = synthetic_dataset(&spec).unwrap();
        let plan = standard_splits(&ds, 30, 5, 10, 7).unwrap();
        assert_eq!(plan.victim_train.len(), 30);
        assert_eq!(plan.reference_train.len(), 5);
        assert_eq!(plan.attack_eval.len(), 10);
        assert!(plan.is_disjoint());
        assert_eq!(plan.victim_train.split_id, "victim-train");
    }

    #[test]
    fn oversized_split_rejected() {
        let spec = SyntheticSpec::new(3, 10, 20, 1);
        let ds = synthetic_dataset(&spec).unwrap();
        assert!(standard_splits(&ds, 15, 5, 5, 7).is_err());
    }

    #[test]
    fn dataset_rejects_bad_pixels_and_labels() {
        let img = Tensor::from_vec(vec![1.5f32]);
        assert!(Dataset::new(vec![img], vec![0], vec![0], "x", 2).is_err());
        let img = Tensor::from_vec(vec![0.5f32]);
        assert!(Dataset::new(vec![img], vec![5], vec![0], "x", 2).is_err());
    }
}
