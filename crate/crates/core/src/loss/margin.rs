use std::f64::consts::{FRAC_PI_2, PI};

use super::{softmax_ce, CosineLogits, COSINE_TOLERANCE, DERIVATIVE_BAND};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, Matrix};

/// Cosines of `embedding` against every row of `head`, rows normalized on
/// the fly.
pub fn cosine_logits(embedding: &[f64], head: &Matrix) -> Result<CosineLogits> {
    cosine_logits_with_norms(embedding, head).map(|(c, _, _)| c)
}

/// Like [`cosine_logits`], additionally returning the unclamped cosines and
/// the row norms needed by backpropagation.
pub fn cosine_logits_with_norms(
    embedding: &[f64],
    head: &Matrix,
) -> Result<(CosineLogits, Vec<f64>, Vec<f64>)> {
    let d = embedding.len();
    if d < 2 {
        return Err(Error::Config(format!("embedding dimension must be at least 2, got {d}")));
    }
    if head.cols() != d {
        return Err(Error::Config(format!(
            "head has {} columns but the embedding has dimension {d}",
            head.cols()
        )));
    }
    let e_norm = norm(embedding);
    if !((e_norm - 1.0).abs() <= 1e-9) {
        return Err(Error::NumericInput(format!("embedding norm {e_norm} is not 1")));
    }
    let mut raw = Vec::with_capacity(head.rows());
    let mut norms = Vec::with_capacity(head.rows());
    for j in 0..head.rows() {
        let row = head.row(j);
        let n = norm(row);
        if !(n >= 1e-12) {
            return Err(Error::DegenerateWeight { row: j, norm: n });
        }
        raw.push(dot(embedding, row) / n);
        norms.push(n);
    }
    let clamped = CosineLogits::new(raw.iter().map(|v| v.clamp(-1.0, 1.0)).collect())?;
    Ok((clamped, raw, norms))
}

fn check_cosine(cos_theta: f64) -> Result<f64> {
    if !cos_theta.is_finite() || cos_theta.abs() > 1.0 + COSINE_TOLERANCE {
        return Err(Error::NumericInput(format!("cosine {cos_theta} outside [-1, 1]")));
    }
    Ok(cos_theta.clamp(-1.0, 1.0))
}

fn check_margin(m: f64) -> Result<()> {
    if !(m > -FRAC_PI_2 && m < FRAC_PI_2) {
        return Err(Error::NumericInput(format!("margin {m} outside (-pi/2, pi/2)")));
    }
    Ok(())
}

/// `cos(clamp(θ + m, 0, π))` and its derivative with respect to `cos θ`.
fn adjust(c: f64, m: f64) -> (f64, f64) {
    let theta = c.acos();
    if theta + m > PI {
        return (-1.0, 0.0);
    }
    if theta + m < 0.0 {
        return (1.0, 0.0);
    }
    let (sin_m, cos_m) = m.sin_cos();
    let sin_theta = (1.0 - c * c).max(0.0).sqrt();
    let value = (c * cos_m - sin_theta * sin_m).clamp(-1.0, 1.0);
    let slope = if m == 0.0 {
        1.0
    } else {
        // 1/sinθ diverges at ±1; evaluate at the edge of the band instead.
        let cb = c.clamp(-1.0 + DERIVATIVE_BAND, 1.0 - DERIVATIVE_BAND);
        cos_m + sin_m * cb / (1.0 - cb * cb).sqrt()
    };
    (value, slope)
}

/// Applies the additive angular margin `m` to a target cosine.
pub fn margin_adjust(cos_theta: f64, m: f64) -> Result<f64> {
    let c = check_cosine(cos_theta)?;
    check_margin(m)?;
    Ok(adjust(c, m).0)
}

/// Derivative of [`margin_adjust`] with respect to `cos_theta`.
///
/// Zero inside the clamped regions. Within `DERIVATIVE_BAND` of ±1 the
/// interior formula is evaluated at the band edge.
pub fn margin_adjust_grad(cos_theta: f64, m: f64) -> Result<f64> {
    let c = check_cosine(cos_theta)?;
    check_margin(m)?;
    Ok(adjust(c, m).1)
}

/// Scaled softmax cross-entropy with angular margin `m` on the target class.
/// Returns the loss and its gradient with respect to every raw cosine.
pub fn margin_softmax_ce(
    cosines: &CosineLogits,
    target: usize,
    scale: f64,
    m: f64,
) -> Result<(f64, Vec<f64>)> {
    let values = cosines.values();
    if target >= values.len() {
        return Err(Error::Index {
            index: target,
            len: values.len(),
        });
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::NumericInput(format!("scale must be positive, got {scale}")));
    }
    check_margin(m)?;
    let (target_cos, slope) = adjust(values[target], m);
    let mut logits: Vec<f64> = values.iter().map(|c| scale * c).collect();
    logits[target] = scale * target_cos;
    let (loss, mut grad) = softmax_ce(&logits, target)?;
    for g in &mut grad {
        *g *= scale;
    }
    grad[target] *= slope;
    Ok((loss, grad))
}
