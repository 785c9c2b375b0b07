use serde::{Deserialize, Serialize};

use super::backprop::train_step;
use super::model::DualHeadModel;
use crate::datagen::Sample;
use crate::error::{Error, Result};
use crate::loss::MarginConfig;
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub margin: MarginConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            lr_start: 1e-3,
            lr_end: 1e-5,
            batch_size: 64,
            seed: 0,
            margin: MarginConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.lr_end > 0.0 && self.lr_start >= self.lr_end && self.lr_start.is_finite()) {
            return Err(Error::Config(format!(
                "learning rates must satisfy lr_start >= lr_end > 0, got {} -> {}",
                self.lr_start, self.lr_end
            )));
        }
        self.margin.validate()
    }

    pub fn steps_per_epoch(&self, dataset_len: usize) -> usize {
        dataset_len.div_ceil(self.batch_size)
    }
}

/// Which training regime produced a history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Training from initialization.
    Initial,
    /// Continued training of a pretrained model.
    Adaptation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub stage: Stage,
    /// Sample-weighted mean of the pre-update batch losses of each epoch.
    pub epoch_loss: Vec<f64>,
    /// Learning rate of the first step of each epoch.
    pub epoch_lr: Vec<f64>,
    /// Learning rate of the very last step.
    pub final_lr: f64,
    pub steps: usize,
}

/// Linear interpolation from `start` (step 0) to `end` (step `total - 1`).
pub fn learning_rate_at(step: usize, total: usize, start: f64, end: f64) -> f64 {
    if total <= 1 {
        return start;
    }
    if step + 1 >= total {
        return end;
    }
    let t = step as f64 / (total - 1) as f64;
    start + (end - start) * t
}

/// Minibatch SGD for `config.epochs` epochs. Epoch `k` visits the dataset
/// in the order of a Fisher-Yates shuffle drawn from `split(seed, k)`.
pub fn train(model: DualHeadModel, dataset: &[Sample], config: &TrainConfig) -> Result<(DualHeadModel, TrainHistory)> {
    run(model, dataset, config, Stage::Initial)
}

/// Continues training a pretrained model on a (typically morph-augmented)
/// dataset. `dataset_classes` is the identity count the dataset was built
/// over and must match the model's head size.
pub fn adapt(
    pretrained: DualHeadModel,
    dataset: &[Sample],
    dataset_classes: usize,
    config: &TrainConfig,
) -> Result<(DualHeadModel, TrainHistory)> {
    if pretrained.num_classes() != dataset_classes {
        return Err(Error::Protocol(format!(
            "pretrained model has {} classes but the dataset has {dataset_classes}",
            pretrained.num_classes()
        )));
    }
    run(pretrained, dataset, config, Stage::Adaptation)
}

fn run(
    mut model: DualHeadModel,
    dataset: &[Sample],
    config: &TrainConfig,
    stage: Stage,
) -> Result<(DualHeadModel, TrainHistory)> {
    config.validate()?;
    model.validate()?;
    if dataset.is_empty() {
        return Err(Error::Config("training dataset is empty".into()));
    }
    let classes = model.num_classes();
    for (i, s) in dataset.iter().enumerate() {
        s.validate(classes).map_err(|e| e.context(format!("training sample {i}")))?;
    }

    let per_epoch = config.steps_per_epoch(dataset.len());
    let total = per_epoch * config.epochs;
    let root = SeededRng::new(config.seed);
    let mut history = TrainHistory {
        stage,
        epoch_loss: Vec::with_capacity(config.epochs),
        epoch_lr: Vec::with_capacity(config.epochs),
        final_lr: config.lr_start,
        steps: 0,
    };
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut batch = Vec::with_capacity(config.batch_size);
    for epoch in 0..config.epochs {
        order.sort_unstable();
        root.split(epoch as u64).shuffle(&mut order);
        let mut weighted = 0.0;
        for (k, chunk) in order.chunks(config.batch_size).enumerate() {
            let step = epoch * per_epoch + k;
            let lr = learning_rate_at(step, total, config.lr_start, config.lr_end);
            if k == 0 {
                history.epoch_lr.push(lr);
            }
            batch.clear();
            batch.extend(chunk.iter().map(|&i| dataset[i].clone()));
            let loss = train_step(&mut model, &batch, &config.margin, lr)
                .map_err(|e| e.context(format!("epoch {epoch}, step {k}")))?;
            if !(loss.is_finite() && loss >= 0.0) {
                return Err(Error::NumericInput(format!("loss became {loss} at epoch {epoch}, step {k}")));
            }
            weighted += loss * chunk.len() as f64;
            history.final_lr = lr;
            history.steps += 1;
        }
        history.epoch_loss.push(weighted / dataset.len() as f64);
    }
    Ok((model, history))
}
