//! Experiment configuration, the pipelines behind every subcommand, and
//! the subcommands themselves.
//!
//! Pipelines ([`experiment`]) are plain functions over in-memory values;
//! commands ([`commands`]) only add file emission on top, so every number
//! in an output bundle can be recomputed through the library API.

pub mod commands;
pub mod config;
pub mod experiment;

pub use config::{AdaptConfig, DataConfig, EvalConfig, ExperimentConfig, ModelConfig, StageConfig, SweepConfig};
pub use experiment::{
    adapt_two_stage, evaluate, prepare_data, sweep_margins, train_model, AdaptOutcome, Evaluation, ExperimentData,
    SweepEntry,
};
