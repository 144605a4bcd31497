use micronet::{Layer, NetworkSpec, Padding};

use crate::{ModelError, Result};

/// Recognized architecture identifiers.
pub const ARCH_IDS: [&str; 5] = [
    "mlp-small",
    "mlp-wide",
    "conv-small",
    "conv-deep",
    "resnet-tiny",
];

fn dense(i: usize, o: usize) -> Layer {
    Layer::Dense {
        in_dim: i,
        out_dim: o,
    }
}

fn conv(i: usize, o: usize) -> Layer {
    Layer::Conv2d {
        in_channels: i,
        out_channels: o,
        kernel: 3,
        padding: Padding::Same,
    }
}

fn block(channels: usize) -> Layer {
    Layer::Residual {
        channels,
        kernel: 3,
        droppable: true,
    }
}

/// Builds a zoo architecture for the given input shape and class count.
///
/// Drop-out sites sit after every hidden ReLU; the classifier head carries
/// none. `resnet-tiny` contains two droppable residual blocks.
pub fn build_architecture(
    arch_id: &str,
    input_shape: &[usize],
    class_count: usize,
) -> Result<NetworkSpec> {
    let n: usize = input_shape.iter().product();
    let mlp = |hidden: [usize; 2]| -> Vec<Layer> {
        vec![
            dense(n, hidden[0]),
            Layer::Relu,
            Layer::DropoutSite,
            dense(hidden[0], hidden[1]),
            Layer::Relu,
            Layer::DropoutSite,
            Layer::Head {
                in_dim: hidden[1],
                class_count,
            },
        ]
    };

    let spatial = || -> Result<(usize, usize)> {
        match input_shape {
            [h, w, 1] => Ok((*h, *w)),
            _ => Err(ModelError::InvalidDataset(format!(
                "conv architectures need [h, w, 1] inputs, got {input_shape:?}"
            ))),
        }
    };

    let layers = match arch_id {
        "mlp-small" => mlp([64, 32]),
        "mlp-wide" => mlp([256, 128]),
        "conv-small" => {
            let (h, w) = spatial()?;
            let (h2, w2) = (h / 2 / 2, w / 2 / 2);
            vec![
                conv(1, 6),
                Layer::Relu,
                Layer::DropoutSite,
                Layer::MaxPool2x2,
                conv(6, 12),
                Layer::Relu,
                Layer::DropoutSite,
                Layer::MaxPool2x2,
                Layer::Flatten,
                Layer::Head {
                    in_dim: h2 * w2 * 12,
                    class_count,
                },
            ]
        }
        "conv-deep" => {
            let (h, w) = spatial()?;
            let (h2, w2) = (h / 2 / 2, w / 2 / 2);
            vec![
                conv(1, 6),
                Layer::Relu,
                Layer::DropoutSite,
                conv(6, 12),
                Layer::Relu,
                Layer::DropoutSite,
                Layer::MaxPool2x2,
                conv(12, 12),
                Layer::Relu,
                Layer::DropoutSite,
                conv(12, 24),
                Layer::Relu,
                Layer::DropoutSite,
                Layer::MaxPool2x2,
                Layer::Flatten,
                Layer::Head {
                    in_dim: h2 * w2 * 24,
                    class_count,
                },
            ]
        }
        "resnet-tiny" => {
            let (h, w) = spatial()?;
            let (h1, w1) = (h / 2, w / 2);
            let (h2, w2) = (h1 / 2, w1 / 2);
            vec![
                conv(1, 8),
                Layer::Relu,
                Layer::DropoutSite,
                Layer::MaxPool2x2,
                block(8),
                block(8),
                Layer::MaxPool2x2,
                Layer::Flatten,
                Layer::Head {
                    in_dim: h2 * w2 * 8,
                    class_count,
                },
            ]
        }
        other => return Err(ModelError::UnknownArch(other.to_string())),
    };

    NetworkSpec::new(layers, input_shape.to_vec(), class_count).map_err(ModelError::from)
}
