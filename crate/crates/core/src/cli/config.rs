use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datagen::MixRatios;
use crate::encoder::TrainConfig;
use crate::error::{Error, Result};
use crate::featviz::AlignMode;
use crate::loss::MarginConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub num_classes: usize,
    pub samples_per_class: usize,
    pub input_dim: usize,
    pub spread: f64,
    /// Fraction of each identity's samples held out for evaluation.
    pub heldout_fraction: f64,
    pub ratios: MixRatios,
    pub morph_alpha: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            num_classes: 40,
            samples_per_class: 50,
            input_dim: 64,
            spread: 0.08,
            heldout_fraction: 0.2,
            ratios: MixRatios::default(),
            morph_alpha: 0.5,
        }
    }
}

impl DataConfig {
    pub fn heldout_per_class(&self) -> usize {
        (self.heldout_fraction * self.samples_per_class as f64).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub hidden_dims: Vec<usize>,
    pub embedding_dim: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden_dims: vec![128],
            embedding_dim: 32,
        }
    }
}

/// One training regime; the seed comes from the experiment's master seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub epochs: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub batch_size: usize,
    pub margin: MarginConfig,
}

impl StageConfig {
    pub fn to_train_config(self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            lr_start: self.lr_start,
            lr_end: self.lr_end,
            batch_size: self.batch_size,
            seed,
            margin: self.margin,
        }
    }

    pub fn with_morph_offset(mut self, morph_offset: f64) -> Self {
        self.margin.morph_offset = morph_offset;
        self
    }
}

impl Default for StageConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            lr_start: 1e-3,
            lr_end: 1e-5,
            batch_size: 64,
            margin: MarginConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Values of the morph margin offset to train with.
    pub margin_grid: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            margin_grid: vec![0.1, 0.05, 0.0, -0.05, -0.1, -0.2, -0.3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaptConfig {
    /// Pretraining on bona fide samples only.
    pub stage1: StageConfig,
    /// Adaptation on the morph-augmented set.
    pub stage2: StageConfig,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            stage1: StageConfig {
                epochs: 15,
                ..StageConfig::default()
            },
            stage2: StageConfig {
                epochs: 10,
                lr_start: 1e-4,
                lr_end: 1e-5,
                batch_size: 64,
                margin: MarginConfig {
                    morph_offset: -0.1,
                    ..MarginConfig::default()
                },
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub fnmr_targets: Vec<f64>,
    pub fmr_targets: Vec<f64>,
    pub genuine_pairs: usize,
    pub impostor_pairs: usize,
    /// Number of evaluation morphs drawn over held-out samples.
    pub eval_morphs: usize,
    pub ellipse_level: f64,
    pub align_mode: AlignMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            fnmr_targets: vec![0.01, 0.001],
            fmr_targets: vec![0.001, 0.0001],
            genuine_pairs: 2000,
            impostor_pairs: 2000,
            eval_morphs: 1000,
            ellipse_level: 0.9,
            align_mode: AlignMode::Rigid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Output directory; `--out` overrides it. Never recorded in manifests.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub train: StageConfig,
    pub sweep: SweepConfig,
    pub adapt: AdaptConfig,
    pub eval: EvalConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            output_dir: None,
            data: DataConfig::default(),
            model: ModelConfig::default(),
            train: StageConfig::default(),
            sweep: SweepConfig::default(),
            adapt: AdaptConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.data;
        if d.num_classes < 2 || d.num_classes % 2 != 0 {
            return Err(Error::Config(format!("data.num_classes must be even and >= 2, got {}", d.num_classes)));
        }
        if d.input_dim < 2 || !(d.spread > 0.0) {
            return Err(Error::Config("data.input_dim must be >= 2 and data.spread > 0".into()));
        }
        d.ratios.validate()?;
        if !(d.ratios.bona_fide > 0.0) {
            return Err(Error::Config("data.ratios.bona_fide must be positive".into()));
        }
        if !(d.morph_alpha > 0.0 && d.morph_alpha < 1.0) {
            return Err(Error::Config(format!("data.morph_alpha must lie in (0, 1), got {}", d.morph_alpha)));
        }
        let held = d.heldout_per_class();
        if !(0.0..1.0).contains(&d.heldout_fraction) || held < 2 || d.samples_per_class < held + 2 {
            return Err(Error::Config(format!(
                "data.heldout_fraction {} must leave at least 2 held-out and 2 training samples per class",
                d.heldout_fraction
            )));
        }
        let m = &self.model;
        if m.embedding_dim < 2 || m.embedding_dim % 2 != 0 || m.hidden_dims.contains(&0) {
            return Err(Error::Config("model.embedding_dim must be even and >= 2; hidden dims >= 1".into()));
        }
        for (name, stage) in [("train", &self.train), ("adapt.stage1", &self.adapt.stage1), ("adapt.stage2", &self.adapt.stage2)] {
            stage
                .to_train_config(0)
                .validate()
                .map_err(|e| Error::Config(format!("{name}: {e}")))?;
        }
        if self.sweep.margin_grid.is_empty() {
            return Err(Error::Config("sweep.margin_grid must not be empty".into()));
        }
        for &offset in &self.sweep.margin_grid {
            self.train
                .with_morph_offset(offset)
                .margin
                .validate()
                .map_err(|e| Error::Config(format!("sweep margin {offset}: {e}")))?;
        }
        let e = &self.eval;
        if e.fnmr_targets.iter().chain(&e.fmr_targets).any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::Config("evaluation targets must lie in [0, 1]".into()));
        }
        if e.genuine_pairs == 0 || e.impostor_pairs == 0 || e.eval_morphs < 3 {
            return Err(Error::Config("need genuine and impostor pairs and at least 3 evaluation morphs".into()));
        }
        if !(e.ellipse_level > 0.0 && e.ellipse_level < 1.0) {
            return Err(Error::Config("eval.ellipse_level must lie in (0, 1)".into()));
        }
        Ok(())
    }
}
