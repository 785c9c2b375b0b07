use crate::error::{Error, Result};
use crate::linalg::{axpy, normalized, Matrix};
use crate::rng::SeededRng;

/// Dense layer `y = W x + b`; `weights` is `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualHeadModel {
    pub layers: Vec<Layer>,
    pub head1: Matrix,
    pub head2: Matrix,
}

impl DualHeadModel {
    /// Checks shape chaining, head agreement and finiteness.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Config("model has no encoder layers".into()));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.bias.len() != layer.output_dim() {
                return Err(Error::Config(format!("layer {i}: bias length does not match output size")));
            }
            if i > 0 && layer.input_dim() != self.layers[i - 1].output_dim() {
                return Err(Error::Config(format!("layer {i}: input size does not chain")));
            }
            if !layer.weights.is_finite() || layer.bias.iter().any(|b| !b.is_finite()) {
                return Err(Error::NumericInput(format!("layer {i} has non-finite parameters")));
            }
        }
        let d = self.embedding_dim();
        if self.head1.cols() != d || self.head2.cols() != d || self.head1.rows() != self.head2.rows() {
            return Err(Error::Config(format!(
                "heads must both be C x {d}, got {}x{} and {}x{}",
                self.head1.rows(),
                self.head1.cols(),
                self.head2.rows(),
                self.head2.cols()
            )));
        }
        if !self.head1.is_finite() || !self.head2.is_finite() {
            return Err(Error::NumericInput("head weights are not finite".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn embedding_dim(&self) -> usize {
        self.layers.last().map_or(0, Layer::output_dim)
    }

    pub fn num_classes(&self) -> usize {
        self.head1.rows()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.bias.len())
            .sum::<usize>()
            + 2 * self.head1.as_slice().len()
    }

    /// Embeds `input`, discarding the backward cache.
    pub fn embed(&self, input: &[f64]) -> Result<Vec<f64>> {
        forward(self, input).map(|(e, _)| e)
    }
}

/// Builds a model with weights and biases drawn from
/// `U(-1/√fan_in, 1/√fan_in)`. Each layer's weights (row-major) then its
/// bias, then head 1, then head 2 are drawn from one seeded stream.
pub fn init_model(
    input_dim: usize,
    hidden_dims: &[usize],
    embedding_dim: usize,
    num_classes: usize,
    seed: u64,
) -> Result<DualHeadModel> {
    if input_dim == 0 || embedding_dim == 0 || num_classes == 0 || hidden_dims.contains(&0) {
        return Err(Error::Config("all model dimensions must be at least 1".into()));
    }
    let mut rng = SeededRng::new(seed);
    let mut uniform = |n: usize, fan_in: usize| -> Vec<f64> {
        let bound = 1.0 / (fan_in as f64).sqrt();
        (0..n).map(|_| rng.uniform_range(-bound, bound)).collect()
    };
    let dims: Vec<usize> = std::iter::once(input_dim)
        .chain(hidden_dims.iter().copied())
        .chain(std::iter::once(embedding_dim))
        .collect();
    let layers = dims
        .windows(2)
        .map(|w| Layer {
            weights: Matrix::from_row_major(w[1], w[0], uniform(w[1] * w[0], w[0])),
            bias: uniform(w[1], w[0]),
        })
        .collect();
    let head1 = Matrix::from_row_major(num_classes, embedding_dim, uniform(num_classes * embedding_dim, embedding_dim));
    let head2 = Matrix::from_row_major(num_classes, embedding_dim, uniform(num_classes * embedding_dim, embedding_dim));
    Ok(DualHeadModel { layers, head1, head2 })
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input of every layer (`inputs[0]` is the sample itself).
    pub inputs: Vec<Vec<f64>>,
    /// Pre-activation output of every layer; the last entry is the
    /// unnormalized embedding `z`.
    pub pre_activations: Vec<Vec<f64>>,
    pub embedding_norm: f64,
}

/// ReLU MLP with a linear final layer, followed by L2 normalization.
pub fn forward(model: &DualHeadModel, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
    if input.len() != model.input_dim() {
        return Err(Error::Config(format!(
            "input has dimension {} but the model expects {}",
            input.len(),
            model.input_dim()
        )));
    }
    if input.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericInput("input contains non-finite values".into()));
    }
    let last = model.layers.len() - 1;
    let mut inputs = Vec::with_capacity(model.layers.len());
    let mut pre_activations = Vec::with_capacity(model.layers.len());
    let mut x = input.to_vec();
    for (i, layer) in model.layers.iter().enumerate() {
        let mut z = layer.weights.matvec(&x);
        axpy(1.0, &layer.bias, &mut z);
        inputs.push(x);
        x = if i < last { z.iter().map(|v| v.max(0.0)).collect() } else { z.clone() };
        pre_activations.push(z);
    }
    let (embedding, embedding_norm) = match normalized(&x, 1e-12) {
        Some(pair) => pair,
        None => return Err(Error::DegenerateEmbedding(crate::linalg::norm(&x))),
    };
    Ok((
        embedding,
        ForwardCache {
            inputs,
            pre_activations,
            embedding_norm,
        },
    ))
}
