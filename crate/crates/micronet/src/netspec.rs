use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Zero padding, output spatial size equals input size (odd kernels).
    Same,
    /// No padding, output shrinks by `kernel - 1`.
    Valid,
}

/// Layer descriptor. Stride-1 convolutions, 2x2 max-pooling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Layer {
    Dense {
        in_dim: usize,
        out_dim: usize,
    },
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        padding: Padding,
    },
    Relu,
    MaxPool2x2,
    /// Unit-level drop-out site; masks the preceding activation.
    DropoutSite,
    /// Residual block: `out = x + relu(conv2(mask(relu(conv1(x)))))`,
    /// with a drop-out site after each internal ReLU. A dropped block
    /// reduces to the identity skip path.
    Residual {
        channels: usize,
        kernel: usize,
        droppable: bool,
    },
    Flatten,
    /// Dense classifier head; must be the final layer.
    Head {
        in_dim: usize,
        class_count: usize,
    },
}

impl Layer {
    pub fn is_parametric(&self) -> bool {
        matches!(
            self,
            Layer::Dense { .. } | Layer::Conv2d { .. } | Layer::Residual { .. } | Layer::Head { .. }
        )
    }
}

/// Architecture description: an ordered layer list plus input/output contract.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    layers: Vec<Layer>,
    input_shape: Vec<usize>,
    class_count: usize,
    // activation_shapes[i] is the input shape of layers[i];
    // activation_shapes[len] is the logits shape.
    activation_shapes: Vec<Vec<usize>>,
}

/// Shapes of all drop-out sites and the number of droppable residual blocks,
/// enumerated in forward order. Residual blocks contribute two sites each
/// (one after each internal ReLU).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DropLayout {
    pub site_shapes: Vec<Vec<usize>>,
    pub droppable_blocks: usize,
}

fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

fn output_shape(layer: &Layer, input: &[usize]) -> Result<Vec<usize>> {
    let invalid = |msg: String| Error::InvalidSpec(msg);
    match layer {
        Layer::Dense { in_dim, out_dim } => {
            if numel(input) != *in_dim {
                return Err(invalid(format!(
                    "dense expects {in_dim} inputs, upstream shape {input:?}"
                )));
            }
            Ok(vec![*out_dim])
        }
        Layer::Conv2d {
            in_channels,
            out_channels,
            kernel,
            padding,
        } => {
            let [h, w, c] = spatial(input)
                .ok_or_else(|| invalid(format!("conv expects [h,w,c] input, got {input:?}")))?;
            if c != *in_channels {
                return Err(invalid(format!(
                    "conv expects {in_channels} channels, got {c}"
                )));
            }
            if *kernel == 0 || *kernel % 2 == 0 {
                return Err(invalid(format!("conv kernel {kernel} must be odd")));
            }
            match padding {
                Padding::Same => Ok(vec![h, w, *out_channels]),
                Padding::Valid => {
                    if h < *kernel || w < *kernel {
                        return Err(invalid(format!(
                            "valid conv kernel {kernel} larger than input {h}x{w}"
                        )));
                    }
                    Ok(vec![h - kernel + 1, w - kernel + 1, *out_channels])
                }
            }
        }
        Layer::Relu | Layer::DropoutSite => Ok(input.to_vec()),
        Layer::MaxPool2x2 => {
            let [h, w, c] = spatial(input)
                .ok_or_else(|| invalid(format!("pool expects [h,w,c] input, got {input:?}")))?;
            if h < 2 || w < 2 {
                return Err(invalid(format!("pool needs at least 2x2 input, got {h}x{w}")));
            }
            Ok(vec![h / 2, w / 2, c])
        }
        Layer::Residual {
            channels, kernel, ..
        } => {
            let [h, w, c] = spatial(input).ok_or_else(|| {
                invalid(format!("residual expects [h,w,c] input, got {input:?}"))
            })?;
            if c != *channels {
                return Err(invalid(format!(
                    "residual expects {channels} channels, got {c}"
                )));
            }
            if *kernel == 0 || *kernel % 2 == 0 {
                return Err(invalid(format!("residual kernel {kernel} must be odd")));
            }
            Ok(vec![h, w, c])
        }
        Layer::Flatten => Ok(vec![numel(input)]),
        Layer::Head {
            in_dim,
            class_count,
        } => {
            if numel(input) != *in_dim {
                return Err(invalid(format!(
                    "head expects {in_dim} inputs, upstream shape {input:?}"
                )));
            }
            Ok(vec![*class_count])
        }
    }
}

fn spatial(shape: &[usize]) -> Option<[usize; 3]> {
    match shape {
        [h, w, c] => Some([*h, *w, *c]),
        _ => None,
    }
}

impl NetworkSpec {
    /// Validates layer chaining, head placement, and drop-out site placement.
    pub fn new(layers: Vec<Layer>, input_shape: Vec<usize>, class_count: usize) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidSpec("empty layer list".into()));
        }
        if input_shape.is_empty() || input_shape.contains(&0) {
            return Err(Error::InvalidSpec(format!(
                "bad input shape {input_shape:?}"
            )));
        }
        if class_count < 2 {
            return Err(Error::InvalidSpec(format!(
                "class count {class_count} < 2"
            )));
        }

        let head_positions: Vec<usize> = layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, Layer::Head { .. }))
            .map(|(i, _)| i)
            .collect();
        if head_positions.len() != 1 || head_positions[0] != layers.len() - 1 {
            return Err(Error::InvalidSpec(
                "exactly one classifier head required, placed last".into(),
            ));
        }
        if let Layer::Head { class_count: k, .. } = &layers[layers.len() - 1] {
            if *k != class_count {
                return Err(Error::InvalidSpec(format!(
                    "head emits {k} classes, spec declares {class_count}"
                )));
            }
        }
        if matches!(layers[0], Layer::DropoutSite) {
            return Err(Error::InvalidSpec(
                "drop-out site cannot be the first layer".into(),
            ));
        }

        let mut activation_shapes = Vec::with_capacity(layers.len() + 1);
        let mut shape = input_shape.clone();
        activation_shapes.push(shape.clone());
        for layer in &layers {
            shape = output_shape(layer, &shape)?;
            activation_shapes.push(shape.clone());
        }

        Ok(Self {
            layers,
            input_shape,
            class_count,
            activation_shapes,
        })
    }

    #[inline]
    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    #[inline]
    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        numel(&self.input_shape)
    }

    #[inline]
    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Input shape of layer `i`; index `len()` gives the logits shape.
    #[inline]
    pub fn activation_shape(&self, i: usize) -> &[usize] {
        &self.activation_shapes[i]
    }

    pub fn droppable_block_count(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| matches!(l, Layer::Residual { droppable: true, .. }))
            .count()
    }

    /// Drop-out site shapes in forward order; residual blocks contribute two.
    pub fn drop_layout(&self) -> DropLayout {
        let mut site_shapes = Vec::new();
        let mut droppable_blocks = 0;
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                Layer::DropoutSite => site_shapes.push(self.activation_shapes[i].clone()),
                Layer::Residual { droppable, .. } => {
                    // Both internal sites mask the block-shaped activation.
                    site_shapes.push(self.activation_shapes[i].clone());
                    site_shapes.push(self.activation_shapes[i].clone());
                    if *droppable {
                        droppable_blocks += 1;
                    }
                }
                _ => {}
            }
        }
        DropLayout {
            site_shapes,
            droppable_blocks,
        }
    }
}
