use crate::{Error, Result, Scalar};

/// Objective evaluated on logits.
///
/// `CrossEntropy` is the training loss (minimized). The margin losses are
/// the hinge logit-diff adversarial objectives (maximized by attacks):
/// untargeted `max_{i != y} z_i - z_y`, targeted `z_c - max_{i != c} z_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    CrossEntropy,
    MarginUntargeted,
    MarginTargeted(usize),
}

/// Index of the largest value; ties broken toward the lowest index.
pub fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn argmax_excluding<T: Scalar>(values: &[T], skip: usize) -> usize {
    let mut best = usize::MAX;
    for (i, &v) in values.iter().enumerate() {
        if i == skip {
            continue;
        }
        if best == usize::MAX || v > values[best] {
            best = i;
        }
    }
    best
}

fn check_label(label: usize, classes: usize) -> Result<()> {
    if label >= classes {
        return Err(Error::BadClassIndex {
            index: label,
            classes,
        });
    }
    Ok(())
}

/// Loss value at the given logits.
pub fn loss_value<T: Scalar>(logits: &[T], label: usize, kind: LossKind) -> Result<T> {
    Ok(loss_grad(logits, label, kind)?.0)
}

/// Loss value and gradient with respect to the logits.
pub fn loss_grad<T: Scalar>(logits: &[T], label: usize, kind: LossKind) -> Result<(T, Vec<T>)> {
    let k = logits.len();
    if k < 2 {
        return Err(Error::InvalidSpec(format!("{k} logits, need at least 2")));
    }
    check_label(label, k)?;
    match kind {
        LossKind::CrossEntropy => {
            let max = logits.iter().fold(logits[0], |a, &b| a.max(b));
            let sum_exp = logits
                .iter()
                .fold(T::zero(), |acc, &z| acc + (z - max).exp());
            let loss = max + sum_exp.ln() - logits[label];
            let mut grad: Vec<T> = logits
                .iter()
                .map(|&z| (z - max).exp() / sum_exp)
                .collect();
            grad[label] = grad[label] - T::one();
            Ok((loss, grad))
        }
        LossKind::MarginUntargeted => {
            let runner = argmax_excluding(logits, label);
            let loss = logits[runner] - logits[label];
            let mut grad = vec![T::zero(); k];
            grad[runner] = T::one();
            grad[label] = grad[label] - T::one();
            Ok((loss, grad))
        }
        LossKind::MarginTargeted(target) => {
            check_label(target, k)?;
            let runner = argmax_excluding(logits, target);
            let loss = logits[target] - logits[runner];
            let mut grad = vec![T::zero(); k];
            grad[target] = T::one();
            grad[runner] = grad[runner] - T::one();
            Ok((loss, grad))
        }
    }
}
