use crate::loss::{loss_grad, LossKind};
use crate::params::LayerParams;
use crate::{audit, DropSample, Error, Layer, NetworkSpec, Padding, ParameterSet, Result, Scalar, Tensor};

// ---------------------------------------------------------------------------
// primitive kernels

fn dense_forward<T: Scalar>(input: &[T], weight: &Tensor<T>, bias: &Tensor<T>) -> Vec<T> {
    let out_dim = weight.shape()[0];
    let in_dim = weight.shape()[1];
    debug_assert_eq!(input.len(), in_dim);
    let w = weight.data();
    let mut out = Vec::with_capacity(out_dim);
    for o in 0..out_dim {
        let row = &w[o * in_dim..(o + 1) * in_dim];
        let mut acc = bias.data()[o];
        for (x, wv) in input.iter().zip(row) {
            acc = acc + *x * *wv;
        }
        out.push(acc);
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn dense_backward<T: Scalar>(
    d_out: &[T],
    input: &[T],
    weight: &Tensor<T>,
    d_input: &mut [T],
    mut grads: Option<(&mut Tensor<T>, &mut Tensor<T>)>,
) {
    let out_dim = weight.shape()[0];
    let in_dim = weight.shape()[1];
    let w = weight.data();
    for o in 0..out_dim {
        let g = d_out[o];
        let row = &w[o * in_dim..(o + 1) * in_dim];
        for (d, wv) in d_input.iter_mut().zip(row) {
            *d = *d + g * *wv;
        }
        if let Some((dw, db)) = grads.as_mut() {
            let drow = &mut dw.data_mut()[o * in_dim..(o + 1) * in_dim];
            for (dv, x) in drow.iter_mut().zip(input) {
                *dv = *dv + g * *x;
            }
            db.data_mut()[o] = db.data_mut()[o] + g;
        }
    }
}

struct ConvDims {
    h: usize,
    w: usize,
    c_in: usize,
    c_out: usize,
    k: usize,
    pad: usize,
    oh: usize,
    ow: usize,
}

fn conv_dims_of<T: Scalar>(in_shape: &[usize], weight: &Tensor<T>, padding: Padding) -> ConvDims {
    let (h, w, c_in) = (in_shape[0], in_shape[1], in_shape[2]);
    let c_out = weight.shape()[0];
    let k = weight.shape()[1];
    debug_assert_eq!(weight.shape()[3], c_in);
    let (pad, oh, ow) = match padding {
        Padding::Same => (k / 2, h, w),
        Padding::Valid => (0, h - k + 1, w - k + 1),
    };
    ConvDims {
        h,
        w,
        c_in,
        c_out,
        k,
        pad,
        oh,
        ow,
    }
}

fn conv_forward<T: Scalar>(
    input: &[T],
    in_shape: &[usize],
    weight: &Tensor<T>,
    bias: &Tensor<T>,
    padding: Padding,
) -> Vec<T> {
    let d = conv_dims_of(in_shape, weight, padding);
    let wt = weight.data();
    let mut out = vec![T::zero(); d.oh * d.ow * d.c_out];
    for oy in 0..d.oh {
        for ox in 0..d.ow {
            for oc in 0..d.c_out {
                let mut acc = bias.data()[oc];
                for ky in 0..d.k {
                    let iy = oy + ky;
                    if iy < d.pad || iy - d.pad >= d.h {
                        continue;
                    }
                    let iy = iy - d.pad;
                    for kx in 0..d.k {
                        let ix = ox + kx;
                        if ix < d.pad || ix - d.pad >= d.w {
                            continue;
                        }
                        let ix = ix - d.pad;
                        let in_base = (iy * d.w + ix) * d.c_in;
                        let w_base = ((oc * d.k + ky) * d.k + kx) * d.c_in;
                        for ic in 0..d.c_in {
                            acc = acc + input[in_base + ic] * wt[w_base + ic];
                        }
                    }
                }
                out[(oy * d.ow + ox) * d.c_out + oc] = acc;
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn conv_backward<T: Scalar>(
    d_out: &[T],
    input: &[T],
    in_shape: &[usize],
    weight: &Tensor<T>,
    padding: Padding,
    d_input: &mut [T],
    mut grads: Option<(&mut Tensor<T>, &mut Tensor<T>)>,
) {
    let d = conv_dims_of(in_shape, weight, padding);
    let wt = weight.data();
    for oy in 0..d.oh {
        for ox in 0..d.ow {
            for oc in 0..d.c_out {
                let g = d_out[(oy * d.ow + ox) * d.c_out + oc];
                if let Some((_, db)) = grads.as_mut() {
                    db.data_mut()[oc] = db.data_mut()[oc] + g;
                }
                for ky in 0..d.k {
                    let iy = oy + ky;
                    if iy < d.pad || iy - d.pad >= d.h {
                        continue;
                    }
                    let iy = iy - d.pad;
                    for kx in 0..d.k {
                        let ix = ox + kx;
                        if ix < d.pad || ix - d.pad >= d.w {
                            continue;
                        }
                        let ix = ix - d.pad;
                        let in_base = (iy * d.w + ix) * d.c_in;
                        let w_base = ((oc * d.k + ky) * d.k + kx) * d.c_in;
                        for ic in 0..d.c_in {
                            d_input[in_base + ic] = d_input[in_base + ic] + g * wt[w_base + ic];
                            if let Some((dw, _)) = grads.as_mut() {
                                dw.data_mut()[w_base + ic] =
                                    dw.data_mut()[w_base + ic] + g * input[in_base + ic];
                            }
                        }
                    }
                }
            }
        }
    }
}

fn relu<T: Scalar>(x: &[T]) -> Vec<T> {
    x.iter().map(|&v| v.max(T::zero())).collect()
}

fn pool_forward<T: Scalar>(input: &[T], in_shape: &[usize]) -> Vec<T> {
    let (h, w, c) = (in_shape[0], in_shape[1], in_shape[2]);
    let (oh, ow) = (h / 2, w / 2);
    let mut out = vec![T::zero(); oh * ow * c];
    for py in 0..oh {
        for px in 0..ow {
            for ch in 0..c {
                let mut best = input[((2 * py) * w + 2 * px) * c + ch];
                for dy in 0..2 {
                    for dx in 0..2 {
                        let v = input[((2 * py + dy) * w + 2 * px + dx) * c + ch];
                        if v > best {
                            best = v;
                        }
                    }
                }
                out[(py * ow + px) * c + ch] = best;
            }
        }
    }
    out
}

fn pool_backward<T: Scalar>(d_out: &[T], input: &[T], in_shape: &[usize], d_input: &mut [T]) {
    let (h, w, c) = (in_shape[0], in_shape[1], in_shape[2]);
    let (oh, ow) = (h / 2, w / 2);
    for py in 0..oh {
        for px in 0..ow {
            for ch in 0..c {
                // Recompute the argmax; ties route to the first position.
                let mut best_idx = ((2 * py) * w + 2 * px) * c + ch;
                let mut best = input[best_idx];
                for dy in 0..2 {
                    for dx in 0..2 {
                        let idx = ((2 * py + dy) * w + 2 * px + dx) * c + ch;
                        if input[idx] > best {
                            best = input[idx];
                            best_idx = idx;
                        }
                    }
                }
                d_input[best_idx] = d_input[best_idx] + d_out[(py * ow + px) * c + ch];
            }
        }
    }
}

// ---------------------------------------------------------------------------
// tape

struct ResidualTrace<T> {
    kept: bool,
    h1_pre: Vec<T>,
    h1: Vec<T>,
    h2_pre: Vec<T>,
}

enum Trace<T> {
    None,
    Residual(ResidualTrace<T>),
}

struct Tape<T> {
    // acts[i] is the input of layers[i]; acts[layers.len()] is the logits.
    acts: Vec<Vec<T>>,
    traces: Vec<Trace<T>>,
}

struct DropCursor<'a, T> {
    sample: Option<&'a DropSample<T>>,
    next_mask: usize,
    next_block: usize,
}

impl<'a, T: Scalar> DropCursor<'a, T> {
    fn new(sample: Option<&'a DropSample<T>>) -> Self {
        Self {
            sample,
            next_mask: 0,
            next_block: 0,
        }
    }

    fn mask(&mut self) -> Option<&'a [T]> {
        let s = self.sample?;
        let m = s.unit_masks[self.next_mask].data();
        self.next_mask += 1;
        Some(m)
    }

    fn keep_block(&mut self, droppable: bool) -> bool {
        if !droppable {
            return true;
        }
        match self.sample {
            None => true,
            Some(s) => {
                let keep = s.block_keep[self.next_block];
                self.next_block += 1;
                keep
            }
        }
    }
}

fn apply_mask<T: Scalar>(values: &mut [T], mask: Option<&[T]>) {
    if let Some(m) = mask {
        for (v, &mv) in values.iter_mut().zip(m) {
            *v = *v * mv;
        }
    }
}

fn layer_params<T: Scalar>(
    params: &ParameterSet<T>,
    index: usize,
) -> (&Tensor<T>, &Tensor<T>) {
    match params.get(index) {
        Some(LayerParams::Affine { weight, bias }) => (weight, bias),
        _ => unreachable!("validated parameter set"),
    }
}

fn residual_params<T: Scalar>(
    params: &ParameterSet<T>,
    index: usize,
) -> (&Tensor<T>, &Tensor<T>, &Tensor<T>, &Tensor<T>) {
    match params.get(index) {
        Some(LayerParams::Residual {
            weight1,
            bias1,
            weight2,
            bias2,
        }) => (weight1, bias1, weight2, bias2),
        _ => unreachable!("validated parameter set"),
    }
}

fn check_inputs<T: Scalar>(
    spec: &NetworkSpec,
    params: &ParameterSet<T>,
    input: &Tensor<T>,
    drop: Option<&DropSample<T>>,
) -> Result<()> {
    if input.shape() != spec.input_shape() {
        return Err(Error::ShapeMismatch {
            context: "network input",
            expected: spec.input_shape().to_vec(),
            got: input.shape().to_vec(),
        });
    }
    if !input.is_finite() {
        return Err(Error::NonFinite("network input"));
    }
    params.validate_against(spec)?;
    if let Some(d) = drop {
        d.validate_against(spec)?;
    }
    Ok(())
}

fn forward_tape<T: Scalar>(
    spec: &NetworkSpec,
    params: &ParameterSet<T>,
    input: &Tensor<T>,
    drop: Option<&DropSample<T>>,
) -> Result<Tape<T>> {
    check_inputs(spec, params, input, drop)?;
    audit::record_forward();

    let mut cursor = DropCursor::new(drop);
    let mut acts: Vec<Vec<T>> = Vec::with_capacity(spec.layers().len() + 1);
    let mut traces: Vec<Trace<T>> = Vec::with_capacity(spec.layers().len());
    acts.push(input.data().to_vec());

    for (i, layer) in spec.layers().iter().enumerate() {
        let x = acts.last().expect("activation");
        let in_shape = spec.activation_shape(i);
        let mut trace = Trace::None;
        let out = match layer {
            Layer::Dense { .. } | Layer::Head { .. } => {
                let (w, b) = layer_params(params, i);
                dense_forward(x, w, b)
            }
            Layer::Conv2d { padding, .. } => {
                let (w, b) = layer_params(params, i);
                conv_forward(x, in_shape, w, b, *padding)
            }
            Layer::Relu => relu(x),
            Layer::MaxPool2x2 => pool_forward(x, in_shape),
            Layer::DropoutSite => {
                let mut out = x.clone();
                apply_mask(&mut out, cursor.mask());
                out
            }
            Layer::Flatten => x.clone(),
            Layer::Residual { droppable, .. } => {
                let mask1 = cursor.mask();
                let mask2 = cursor.mask();
                let kept = cursor.keep_block(*droppable);
                if kept {
                    let (w1, b1, w2, b2) = residual_params(params, i);
                    let h1_pre = conv_forward(x, in_shape, w1, b1, Padding::Same);
                    let mut h1 = relu(&h1_pre);
                    apply_mask(&mut h1, mask1);
                    let h2_pre = conv_forward(&h1, in_shape, w2, b2, Padding::Same);
                    let mut branch = relu(&h2_pre);
                    apply_mask(&mut branch, mask2);
                    let out: Vec<T> = x.iter().zip(&branch).map(|(&a, &b)| a + b).collect();
                    trace = Trace::Residual(ResidualTrace {
                        kept,
                        h1_pre,
                        h1,
                        h2_pre,
                    });
                    out
                } else {
                    trace = Trace::Residual(ResidualTrace {
                        kept,
                        h1_pre: Vec::new(),
                        h1: Vec::new(),
                        h2_pre: Vec::new(),
                    });
                    x.clone()
                }
            }
        };
        traces.push(trace);
        acts.push(out);
    }

    Ok(Tape { acts, traces })
}

#[allow(clippy::too_many_arguments)]
fn backward<T: Scalar>(
    spec: &NetworkSpec,
    params: &ParameterSet<T>,
    drop: Option<&DropSample<T>>,
    tape: &Tape<T>,
    d_logits: Vec<T>,
    mut param_grads: Option<&mut ParameterSet<T>>,
) -> Vec<T> {
    // Rebuild mask positions so the reverse walk can index masks directly.
    let mut mask_at_layer: Vec<(Option<usize>, Option<usize>)> = Vec::new();
    let mut mask_idx = 0usize;
    for layer in spec.layers() {
        match layer {
            Layer::DropoutSite => {
                mask_at_layer.push((Some(mask_idx), None));
                mask_idx += 1;
            }
            Layer::Residual { .. } => {
                mask_at_layer.push((Some(mask_idx), Some(mask_idx + 1)));
                mask_idx += 2;
            }
            _ => mask_at_layer.push((None, None)),
        }
    }
    let mask_data = |idx: Option<usize>| -> Option<&[T]> {
        match (drop, idx) {
            (Some(s), Some(i)) => Some(s.unit_masks[i].data()),
            _ => None,
        }
    };

    let mut d_out = d_logits;
    for (i, layer) in spec.layers().iter().enumerate().rev() {
        let x = &tape.acts[i];
        let in_shape = spec.activation_shape(i);
        let mut d_in = vec![T::zero(); x.len()];
        match layer {
            Layer::Dense { .. } | Layer::Head { .. } => {
                let (w, _) = layer_params(params, i);
                let grads = param_grads.as_mut().map(|g| match g.get_mut_internal(i) {
                    Some(LayerParams::Affine { weight, bias }) => (weight, bias),
                    _ => unreachable!("gradient structure mirrors params"),
                });
                dense_backward(&d_out, x, w, &mut d_in, grads);
            }
            Layer::Conv2d { padding, .. } => {
                let (w, _) = layer_params(params, i);
                let grads = param_grads.as_mut().map(|g| match g.get_mut_internal(i) {
                    Some(LayerParams::Affine { weight, bias }) => (weight, bias),
                    _ => unreachable!("gradient structure mirrors params"),
                });
                conv_backward(&d_out, x, in_shape, w, *padding, &mut d_in, grads);
            }
            Layer::Relu => {
                for ((d, &g), &xv) in d_in.iter_mut().zip(&d_out).zip(x) {
                    if xv > T::zero() {
                        *d = g;
                    }
                }
            }
            Layer::MaxPool2x2 => pool_backward(&d_out, x, in_shape, &mut d_in),
            Layer::DropoutSite => {
                d_in.copy_from_slice(&d_out);
                apply_mask(&mut d_in, mask_data(mask_at_layer[i].0));
            }
            Layer::Flatten => d_in.copy_from_slice(&d_out),
            Layer::Residual { .. } => {
                let trace = match &tape.traces[i] {
                    Trace::Residual(t) => t,
                    Trace::None => unreachable!("residual trace recorded in forward"),
                };
                // Skip path.
                d_in.copy_from_slice(&d_out);
                if trace.kept {
                    let (w1, _, w2, _) = residual_params(params, i);
                    // Through mask2 and the second ReLU.
                    let mut d_h2_pre = d_out.clone();
                    apply_mask(&mut d_h2_pre, mask_data(mask_at_layer[i].1));
                    for (d, &pre) in d_h2_pre.iter_mut().zip(&trace.h2_pre) {
                        if pre <= T::zero() {
                            *d = T::zero();
                        }
                    }
                    let mut d_h1 = vec![T::zero(); trace.h1.len()];
                    {
                        let grads2 = param_grads.as_mut().map(|g| match g.get_mut_internal(i) {
                            Some(LayerParams::Residual {
                                weight2, bias2, ..
                            }) => (weight2, bias2),
                            _ => unreachable!("gradient structure mirrors params"),
                        });
                        conv_backward(
                            &d_h2_pre,
                            &trace.h1,
                            in_shape,
                            w2,
                            Padding::Same,
                            &mut d_h1,
                            grads2,
                        );
                    }
                    // Through mask1 and the first ReLU.
                    apply_mask(&mut d_h1, mask_data(mask_at_layer[i].0));
                    for (d, &pre) in d_h1.iter_mut().zip(&trace.h1_pre) {
                        if pre <= T::zero() {
                            *d = T::zero();
                        }
                    }
                    let grads1 = param_grads.as_mut().map(|g| match g.get_mut_internal(i) {
                        Some(LayerParams::Residual {
                            weight1, bias1, ..
                        }) => (weight1, bias1),
                        _ => unreachable!("gradient structure mirrors params"),
                    });
                    conv_backward(
                        &d_h1,
                        x,
                        in_shape,
                        w1,
                        Padding::Same,
                        &mut d_in,
                        grads1,
                    );
                }
            }
        }
        d_out = d_in;
    }
    d_out
}

// ---------------------------------------------------------------------------
// public operations

/// Deterministic forward pass; returns the logit vector.
pub fn forward<T: Scalar>(
    spec: &NetworkSpec,
    params: &ParameterSet<T>,
    input: &Tensor<T>,
    drop: Option<&DropSample<T>>,
) -> Result<Tensor<T>> {
    let tape = forward_tape(spec, params, input, drop)?;
    let logits = tape.acts.last().expect("logits").clone();
    Ok(Tensor::from_vec(logits))
}

/// Exact gradient of the chosen loss with respect to the input, under a
/// fixed drop sample.
pub fn input_gradient<T: Scalar>(
    spec: &NetworkSpec,
    params: &ParameterSet<T>,
    input: &Tensor<T>,
    label: usize,
    loss: LossKind,
    drop: Option<&DropSample<T>>,
) -> Result<Tensor<T>> {
    let tape = forward_tape(spec, params, input, drop)?;
    let logits = tape.acts.last().expect("logits");
    let (_, d_logits) = loss_grad(logits, label, loss)?;
    let d_input = backward(spec, params, drop, &tape, d_logits, None);
    Tensor::new(input.shape().to_vec(), d_input)
}

/// Gradients of the chosen loss with respect to every parameter tensor.
pub fn param_gradient<T: Scalar>(
    spec: &NetworkSpec,
    params: &ParameterSet<T>,
    input: &Tensor<T>,
    label: usize,
    loss: LossKind,
    drop: Option<&DropSample<T>>,
) -> Result<ParameterSet<T>> {
    let tape = forward_tape(spec, params, input, drop)?;
    let logits = tape.acts.last().expect("logits");
    let (_, d_logits) = loss_grad(logits, label, loss)?;
    let mut grads = params.zeros_like();
    backward(spec, params, drop, &tape, d_logits, Some(&mut grads));
    Ok(grads)
}

/// `params <- params - learning_rate * gradients`, elementwise.
pub fn sgd_update<T: Scalar>(
    params: &mut ParameterSet<T>,
    gradients: &ParameterSet<T>,
    learning_rate: T,
) -> Result<()> {
    params.add_scaled(gradients, -learning_rate)
}
