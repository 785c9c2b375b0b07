use super::model::{forward, DualHeadModel};
use crate::datagen::Sample;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, Matrix};
use crate::loss::{cosine_logits_with_norms, morphguard_loss, BranchCosines, MarginConfig};

/// Parameter gradients, shaped like [`DualHeadModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Matrix, Vec<f64>)>,
    pub head1: Matrix,
    pub head2: Matrix,
}

impl Gradients {
    pub fn zeros_like(model: &DualHeadModel) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| (Matrix::zeros(l.output_dim(), l.input_dim()), vec![0.0; l.output_dim()]))
                .collect(),
            head1: Matrix::zeros(model.head1.rows(), model.head1.cols()),
            head2: Matrix::zeros(model.head2.rows(), model.head2.cols()),
        }
    }

    /// Every gradient entry in the canonical parameter order: per layer
    /// weights then bias, then head 1, then head 2.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in &self.layers {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        out.extend_from_slice(self.head1.as_slice());
        out.extend_from_slice(self.head2.as_slice());
        out
    }
}

/// Mutable views of every model parameter in the order of [`Gradients::flatten`].
pub fn parameters_mut(model: &mut DualHeadModel) -> Vec<&mut [f64]> {
    let mut out: Vec<&mut [f64]> = Vec::new();
    for layer in &mut model.layers {
        out.push(layer.weights.as_mut_slice());
        out.push(&mut layer.bias);
    }
    out.push(model.head1.as_mut_slice());
    out.push(model.head2.as_mut_slice());
    out
}

/// Batch loss and the gradient of every parameter, by reverse-mode
/// differentiation through the heads, the L2 normalization and the MLP.
pub fn loss_and_gradients(
    model: &DualHeadModel,
    batch: &[Sample],
    margin: &MarginConfig,
) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut caches = Vec::with_capacity(batch.len());
    let mut branches = Vec::with_capacity(batch.len());
    for (i, sample) in batch.iter().enumerate() {
        let (embedding, cache) = forward(model, &sample.input).map_err(|e| e.context(format!("sample {i}")))?;
        let (c1, raw1, norms1) = cosine_logits_with_norms(&embedding, &model.head1)?;
        let (c2, raw2, norms2) = cosine_logits_with_norms(&embedding, &model.head2)?;
        branches.push(BranchCosines {
            head1: c1,
            head2: c2,
            labels: sample.labels,
        });
        caches.push((embedding, cache, [(raw1, norms1), (raw2, norms2)]));
    }
    let out = morphguard_loss(&branches, margin)?;

    let mut grads = Gradients::zeros_like(model);
    let d = model.embedding_dim();
    for ((embedding, cache, heads), (g1, g2)) in caches.iter().zip(&out.grads) {
        let mut d_embedding = vec![0.0; d];
        for ((head, grad_head), ((raw, norms), g)) in [(&model.head1, &mut grads.head1), (&model.head2, &mut grads.head2)]
            .into_iter()
            .zip(heads.iter().zip([g1, g2]))
        {
            for j in 0..head.rows() {
                if g[j] == 0.0 {
                    continue;
                }
                let row = head.row(j);
                let inv = 1.0 / norms[j];
                // ∂cos/∂e = ŵ,  ∂cos/∂w = (e − cos·ŵ)/‖w‖
                axpy(g[j] * inv, row, &mut d_embedding);
                let grad_row = grad_head.row_mut(j);
                for k in 0..d {
                    grad_row[k] += g[j] * inv * (embedding[k] - raw[j] * row[k] * inv);
                }
            }
        }

        // Through e = z/‖z‖: dz = (I − e eᵀ) de / ‖z‖.
        let proj = dot(embedding, &d_embedding);
        let mut delta: Vec<f64> = d_embedding
            .iter()
            .zip(embedding)
            .map(|(g, e)| (g - e * proj) / cache.embedding_norm)
            .collect();

        for i in (0..model.layers.len()).rev() {
            let input = &cache.inputs[i];
            let (gw, gb) = &mut grads.layers[i];
            for (r, &dr) in delta.iter().enumerate() {
                if dr != 0.0 {
                    axpy(dr, input, gw.row_mut(r));
                }
            }
            axpy(1.0, &delta, gb);
            if i > 0 {
                let upstream = model.layers[i].weights.matvec_t(&delta);
                delta = upstream
                    .iter()
                    .zip(&cache.pre_activations[i - 1])
                    .map(|(g, z)| if *z > 0.0 { *g } else { 0.0 })
                    .collect();
            }
        }
    }
    Ok((out.loss, grads))
}

/// One SGD step `θ ← θ − lr·∇θ`. Returns the loss before the update.
pub fn train_step(model: &mut DualHeadModel, batch: &[Sample], margin: &MarginConfig, lr: f64) -> Result<f64> {
    if !(lr >= 0.0 && lr.is_finite()) {
        return Err(Error::Config(format!("learning rate must be nonnegative, got {lr}")));
    }
    let (loss, grads) = loss_and_gradients(model, batch, margin)?;
    let flat = grads.flatten();
    let mut offset = 0;
    for params in parameters_mut(model) {
        for (p, g) in params.iter_mut().zip(&flat[offset..]) {
            *p -= lr * g;
        }
        offset += params.len();
    }
    Ok(loss)
}
