use super::{margin_softmax_ce, CosineLogits, LabelPair, MarginConfig};
use crate::error::{Error, Result};

/// Cosines of one sample against both class heads, with its label pair.
#[derive(Debug, Clone)]
pub struct BranchCosines {
    pub head1: CosineLogits,
    pub head2: CosineLogits,
    pub labels: LabelPair,
}

#[derive(Debug, Clone)]
pub struct MorphGuardOutput {
    /// Batch mean of the per-sample two-branch losses.
    pub loss: f64,
    /// Unreduced two-branch loss of every sample.
    pub per_sample: Vec<f64>,
    /// Gradients of `loss` with respect to each sample's head-1 and head-2
    /// cosines (already divided by the batch size).
    pub grads: Vec<(Vec<f64>, Vec<f64>)>,
}

/// Dual-branch margin loss: head 1 is trained towards `y_dot`, head 2
/// towards `y_ddot`, both with margin `m_BF + m_MG` for morphs and `m_BF`
/// otherwise.
pub fn morphguard_loss(batch: &[BranchCosines], config: &MarginConfig) -> Result<MorphGuardOutput> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    config.validate()?;
    let n = batch.len() as f64;
    let mut per_sample = Vec::with_capacity(batch.len());
    let mut grads = Vec::with_capacity(batch.len());
    for (i, item) in batch.iter().enumerate() {
        let classes = item.head1.len();
        if item.head2.len() != classes {
            return Err(Error::Protocol(format!(
                "sample {i}: head cosine lengths differ ({} vs {})",
                classes,
                item.head2.len()
            )));
        }
        item.labels
            .validate(classes)
            .map_err(|e| e.context(format!("sample {i}")))?;
        let m = config.margin_for(item.labels.kind);
        let (l1, mut g1) = margin_softmax_ce(&item.head1, item.labels.y_dot, config.scale, m)?;
        let (l2, mut g2) = margin_softmax_ce(&item.head2, item.labels.y_ddot, config.scale, m)?;
        g1.iter_mut().chain(g2.iter_mut()).for_each(|g| *g /= n);
        per_sample.push(l1 + l2);
        grads.push((g1, g2));
    }
    let loss = per_sample.iter().sum::<f64>() / n;
    Ok(MorphGuardOutput {
        loss,
        per_sample,
        grads,
    })
}
