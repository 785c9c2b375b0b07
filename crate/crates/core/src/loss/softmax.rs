use crate::error::{Error, Result};

/// Numerically stable softmax. The largest entry contributes exactly 1 to
/// the normalizer; the rest are accumulated separately so `ln_1p` keeps
/// precision when the distribution is saturated.
fn log_normalizer(logits: &[f64]) -> (usize, f64, f64) {
    let (argmax, max) = logits
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let rest: f64 = logits
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != argmax)
        .map(|(_, &v)| (v - max).exp())
        .sum();
    (argmax, max, rest.ln_1p())
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let (_, max, log_z) = log_normalizer(logits);
    logits.iter().map(|&v| (v - max - log_z).exp()).collect()
}

/// Cross-entropy of `softmax(logits)` against `target`, with gradient
/// `softmax(logits) - onehot(target)`.
pub fn softmax_ce(logits: &[f64], target: usize) -> Result<(f64, Vec<f64>)> {
    if target >= logits.len() {
        return Err(Error::Index {
            index: target,
            len: logits.len(),
        });
    }
    if let Some(bad) = logits.iter().find(|v| !v.is_finite()) {
        return Err(Error::NumericInput(format!("non-finite logit {bad}")));
    }
    let (_, max, log_z) = log_normalizer(logits);
    let loss = log_z - (logits[target] - max);
    let mut grad: Vec<f64> = logits.iter().map(|&v| (v - max - log_z).exp()).collect();
    grad[target] -= 1.0;
    Ok((loss.max(0.0), grad))
}
