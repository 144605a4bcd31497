use rand::Rng;

use crate::{Error, NetworkSpec, Result, Scalar, Tensor};

/// A sampled drop-out/drop-layer configuration.
///
/// `unit_masks` follow the spec's drop-site order ([`NetworkSpec::drop_layout`]);
/// `block_keep` follows the order of droppable residual blocks. Masks are
/// pure 0/1 with no keep-probability rescaling, and a given sample applies
/// identically in forward and backward passes.
#[derive(Debug, Clone, PartialEq)]
pub struct DropSample<T = f32> {
    pub unit_masks: Vec<Tensor<T>>,
    pub block_keep: Vec<bool>,
    pub ratio: f64,
}

impl<T: Scalar> DropSample<T> {
    /// All-ones masks, all blocks kept: the explicit no-drop sample.
    pub fn identity(spec: &NetworkSpec) -> Self {
        let layout = spec.drop_layout();
        DropSample {
            unit_masks: layout
                .site_shapes
                .iter()
                .map(|s| Tensor::filled(s.clone(), T::one()))
                .collect(),
            block_keep: vec![true; layout.droppable_blocks],
            ratio: 0.0,
        }
    }

    pub fn validate_against(&self, spec: &NetworkSpec) -> Result<()> {
        let layout = spec.drop_layout();
        if self.unit_masks.len() != layout.site_shapes.len() {
            return Err(Error::DropMismatch(format!(
                "{} masks for {} drop sites",
                self.unit_masks.len(),
                layout.site_shapes.len()
            )));
        }
        for (mask, shape) in self.unit_masks.iter().zip(&layout.site_shapes) {
            if mask.shape() != shape.as_slice() {
                return Err(Error::DropMismatch(format!(
                    "mask shape {:?} at a site of shape {:?}",
                    mask.shape(),
                    shape
                )));
            }
            if mask
                .data()
                .iter()
                .any(|&v| v != T::zero() && v != T::one())
            {
                return Err(Error::DropMismatch("mask entries must be 0 or 1".into()));
            }
        }
        if self.block_keep.len() != layout.droppable_blocks {
            return Err(Error::DropMismatch(format!(
                "{} keep bits for {} droppable blocks",
                self.block_keep.len(),
                layout.droppable_blocks
            )));
        }
        Ok(())
    }
}

/// Samples a drop configuration: every mask entry is independently zero with
/// probability `ratio`, every droppable block is dropped with probability
/// `ratio`.
pub fn sample_drop<T: Scalar>(
    spec: &NetworkSpec,
    ratio: f64,
    rng: &mut impl Rng,
) -> Result<DropSample<T>> {
    if !(0.0..=1.0).contains(&ratio) || !ratio.is_finite() {
        return Err(Error::InvalidRatio(ratio));
    }
    if ratio == 0.0 {
        return Ok(DropSample::identity(spec));
    }
    let layout = spec.drop_layout();
    let unit_masks = layout
        .site_shapes
        .iter()
        .map(|shape| {
            let n: usize = shape.iter().product();
            let data: Vec<T> = (0..n)
                .map(|_| {
                    if rng.random::<f64>() < ratio {
                        T::zero()
                    } else {
                        T::one()
                    }
                })
                .collect();
            Tensor::new(shape.clone(), data).expect("mask shape")
        })
        .collect();
    let block_keep = (0..layout.droppable_blocks)
        .map(|_| rng.random::<f64>() >= ratio)
        .collect();
    Ok(DropSample {
        unit_masks,
        block_keep,
        ratio,
    })
}
