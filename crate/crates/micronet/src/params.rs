use std::collections::BTreeMap;

use rand::Rng;

use crate::{Error, Layer, NetworkSpec, Result, Scalar, Tensor};

/// Learned tensors of one parametric layer.
///
/// Convolution weights are `[out_channels, kernel, kernel, in_channels]`,
/// dense weights `[out_dim, in_dim]`, biases 1-d.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerParams<T = f32> {
    Affine {
        weight: Tensor<T>,
        bias: Tensor<T>,
    },
    Residual {
        weight1: Tensor<T>,
        bias1: Tensor<T>,
        weight2: Tensor<T>,
        bias2: Tensor<T>,
    },
}

impl<T: Scalar> LayerParams<T> {
    /// Tensors in canonical serialization order.
    pub fn tensors(&self) -> Vec<&Tensor<T>> {
        match self {
            LayerParams::Affine { weight, bias } => vec![weight, bias],
            LayerParams::Residual {
                weight1,
                bias1,
                weight2,
                bias2,
            } => vec![weight1, bias1, weight2, bias2],
        }
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        match self {
            LayerParams::Affine { weight, bias } => vec![weight, bias],
            LayerParams::Residual {
                weight1,
                bias1,
                weight2,
                bias2,
            } => vec![weight1, bias1, weight2, bias2],
        }
    }
}

/// Per-layer parameters keyed by layer index into the owning spec.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParameterSet<T = f32> {
    entries: BTreeMap<usize, LayerParams<T>>,
}

/// Expected parameter tensor shapes for one layer.
fn expected_shapes(spec: &NetworkSpec, index: usize) -> Option<Vec<Vec<usize>>> {
    let layer = &spec.layers()[index];
    match layer {
        Layer::Dense { in_dim, out_dim } => {
            Some(vec![vec![*out_dim, *in_dim], vec![*out_dim]])
        }
        Layer::Head {
            in_dim,
            class_count,
        } => Some(vec![vec![*class_count, *in_dim], vec![*class_count]]),
        Layer::Conv2d {
            in_channels,
            out_channels,
            kernel,
            ..
        } => Some(vec![
            vec![*out_channels, *kernel, *kernel, *in_channels],
            vec![*out_channels],
        ]),
        Layer::Residual {
            channels, kernel, ..
        } => {
            let w = vec![*channels, *kernel, *kernel, *channels];
            Some(vec![w.clone(), vec![*channels], w, vec![*channels]])
        }
        _ => None,
    }
}

impl<T: Scalar> ParameterSet<T> {
    pub fn new() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, layer_index: usize, params: LayerParams<T>) {
        self.entries.insert(layer_index, params);
    }

    pub fn get(&self, layer_index: usize) -> Option<&LayerParams<T>> {
        self.entries.get(&layer_index)
    }

    pub(crate) fn get_mut_internal(&mut self, layer_index: usize) -> Option<&mut LayerParams<T>> {
        self.entries.get_mut(&layer_index)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, &LayerParams<T>)> {
        self.entries.iter().map(|(&i, p)| (i, p))
    }

    pub fn layer_indices(&self) -> Vec<usize> {
        self.entries.keys().copied().collect()
    }

    /// Total scalar count across all tensors.
    pub fn numel(&self) -> usize {
        self.entries
            .values()
            .flat_map(|p| p.tensors())
            .map(|t| t.numel())
            .sum()
    }

    /// Flat view of all parameters in canonical order (ascending layer
    /// index, weight-before-bias). This order defines the weight-blob layout.
    pub fn flat(&self) -> Vec<T> {
        self.entries
            .values()
            .flat_map(|p| p.tensors())
            .flat_map(|t| t.data().iter().copied())
            .collect()
    }

    /// Checks that keys and tensor shapes exactly match the spec's
    /// parametric layers.
    pub fn validate_against(&self, spec: &NetworkSpec) -> Result<()> {
        let expected: Vec<usize> = spec
            .layers()
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_parametric())
            .map(|(i, _)| i)
            .collect();
        let got = self.layer_indices();
        if expected != got {
            return Err(Error::ParamMismatch(format!(
                "parametric layer indices {expected:?}, parameter keys {got:?}"
            )));
        }
        for (&index, params) in &self.entries {
            let shapes = expected_shapes(spec, index).expect("parametric layer");
            let actual: Vec<Vec<usize>> = params
                .tensors()
                .iter()
                .map(|t| t.shape().to_vec())
                .collect();
            if shapes != actual {
                return Err(Error::ParamMismatch(format!(
                    "layer {index}: expected tensor shapes {shapes:?}, got {actual:?}"
                )));
            }
            let wants_residual = matches!(spec.layers()[index], Layer::Residual { .. });
            let is_residual = matches!(params, LayerParams::Residual { .. });
            if wants_residual != is_residual {
                return Err(Error::ParamMismatch(format!(
                    "layer {index}: parameter variant does not match layer kind"
                )));
            }
        }
        Ok(())
    }

    /// Rebuilds a parameter set from a flat slice in canonical order.
    pub fn from_flat(spec: &NetworkSpec, flat: &[T]) -> Result<Self> {
        let mut set = ParameterSet::new();
        let mut offset = 0usize;
        for (index, layer) in spec.layers().iter().enumerate() {
            if !layer.is_parametric() {
                continue;
            }
            let shapes = expected_shapes(spec, index).expect("parametric layer");
            let mut tensors = Vec::with_capacity(shapes.len());
            for shape in &shapes {
                let n: usize = shape.iter().product();
                if offset + n > flat.len() {
                    return Err(Error::ParamMismatch(format!(
                        "flat parameter buffer too short: needed more than {} values",
                        flat.len()
                    )));
                }
                tensors.push(Tensor::new(shape.clone(), flat[offset..offset + n].to_vec())?);
                offset += n;
            }
            let params = match layer {
                Layer::Residual { .. } => {
                    let mut it = tensors.into_iter();
                    LayerParams::Residual {
                        weight1: it.next().unwrap(),
                        bias1: it.next().unwrap(),
                        weight2: it.next().unwrap(),
                        bias2: it.next().unwrap(),
                    }
                }
                _ => {
                    let mut it = tensors.into_iter();
                    LayerParams::Affine {
                        weight: it.next().unwrap(),
                        bias: it.next().unwrap(),
                    }
                }
            };
            set.insert(index, params);
        }
        if offset != flat.len() {
            return Err(Error::ParamMismatch(format!(
                "flat parameter buffer has {} values, spec consumes {offset}",
                flat.len()
            )));
        }
        Ok(set)
    }

    pub fn cast<U: Scalar>(&self) -> ParameterSet<U> {
        let mut out = ParameterSet::new();
        for (&i, p) in &self.entries {
            let cast = match p {
                LayerParams::Affine { weight, bias } => LayerParams::Affine {
                    weight: weight.cast(),
                    bias: bias.cast(),
                },
                LayerParams::Residual {
                    weight1,
                    bias1,
                    weight2,
                    bias2,
                } => LayerParams::Residual {
                    weight1: weight1.cast(),
                    bias1: bias1.cast(),
                    weight2: weight2.cast(),
                    bias2: bias2.cast(),
                },
            };
            out.insert(i, cast);
        }
        out
    }

    /// Same structure with all values zero; gradient accumulators start here.
    pub fn zeros_like(&self) -> ParameterSet<T> {
        let mut out = self.clone();
        for p in out.entries.values_mut() {
            for t in p.tensors_mut() {
                t.data_mut().fill(T::zero());
            }
        }
        out
    }

    /// `self += scale * other`, elementwise. Structures must match.
    pub fn add_scaled(&mut self, other: &ParameterSet<T>, scale: T) -> Result<()> {
        if self.layer_indices() != other.layer_indices() {
            return Err(Error::ParamMismatch(
                "parameter sets have different layer keys".into(),
            ));
        }
        for (index, mine) in self.entries.iter_mut() {
            let theirs = &other.entries[index];
            let mut dst = mine.tensors_mut();
            let src = theirs.tensors();
            if dst.len() != src.len() {
                return Err(Error::ParamMismatch(format!(
                    "layer {index}: tensor count mismatch"
                )));
            }
            for (d, s) in dst.iter_mut().zip(src) {
                if d.shape() != s.shape() {
                    return Err(Error::ParamMismatch(format!(
                        "layer {index}: tensor shape mismatch"
                    )));
                }
                for (dv, &sv) in d.data_mut().iter_mut().zip(s.data()) {
                    *dv = *dv + scale * sv;
                }
            }
        }
        Ok(())
    }
}

/// He-style random initialization: weights `N(0, 2/fan_in)`, zero biases.
pub fn init_params(spec: &NetworkSpec, rng: &mut impl Rng) -> ParameterSet<f32> {
    let mut set = ParameterSet::new();
    for (index, layer) in spec.layers().iter().enumerate() {
        if !layer.is_parametric() {
            continue;
        }
        let shapes = expected_shapes(spec, index).expect("parametric layer");
        let mut tensors = Vec::with_capacity(shapes.len());
        for shape in &shapes {
            if shape.len() == 1 {
                tensors.push(Tensor::zeros(shape.clone()));
            } else {
                let fan_in: usize = shape[1..].iter().product();
                let std = (2.0 / fan_in as f32).sqrt();
                let data: Vec<f32> = (0..shape.iter().product())
                    .map(|_| standard_normal(rng) * std)
                    .collect();
                tensors.push(Tensor::new(shape.clone(), data).expect("init shape"));
            }
        }
        let params = match layer {
            Layer::Residual { .. } => {
                let mut it = tensors.into_iter();
                LayerParams::Residual {
                    weight1: it.next().unwrap(),
                    bias1: it.next().unwrap(),
                    weight2: it.next().unwrap(),
                    bias2: it.next().unwrap(),
                }
            }
            _ => {
                let mut it = tensors.into_iter();
                LayerParams::Affine {
                    weight: it.next().unwrap(),
                    bias: it.next().unwrap(),
                }
            }
        };
        set.insert(index, params);
    }
    set
}

/// Box-Muller standard normal; avoids a rand_distr dependency here.
fn standard_normal(rng: &mut impl Rng) -> f32 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    ((-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()) as f32
}
