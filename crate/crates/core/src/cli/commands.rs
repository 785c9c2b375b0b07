//! Subcommands: each runs a pipeline from [`super::experiment`] and writes
//! its output bundle. Every bundle carries a `manifest.json` holding the
//! command, the effective config and the input artifact paths.
//!
//! Data bundle (`gen-data`): `universe.json`, `bona_fide_train.jsonl`,
//! `bona_fide_heldout.jsonl`, `train.jsonl`, `protocol_train.json`,
//! `protocol_eval.json`. Commands that need data read such a bundle when
//! given `--data`, and otherwise regenerate it from the config.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::experiment::{
    adapt_two_stage, eval_triplets, evaluate, prepare_data, sweep_margins, train_model, Evaluation, ExperimentData,
};
use crate::datagen::{read_dataset, read_protocol, write_dataset, write_protocol, IdentityUniverse};
use crate::encoder::{load_checkpoint, save_checkpoint, DualHeadModel, TrainHistory};
use crate::error::{Error, Result};
use crate::featviz::{morph_spread_with, render_svg, write_cloud_csv, write_ellipse_csv};
use crate::metrics::{write_curve_csv, write_operating_points_csv, write_scores_csv, write_trials_json};

pub const MANIFEST: &str = "manifest.json";
pub const UNIVERSE: &str = "universe.json";
pub const BONA_FIDE_TRAIN: &str = "bona_fide_train.jsonl";
pub const BONA_FIDE_HELDOUT: &str = "bona_fide_heldout.jsonl";
pub const TRAINING_SET: &str = "train.jsonl";
pub const PROTOCOL_TRAIN: &str = "protocol_train.json";
pub const PROTOCOL_EVAL: &str = "protocol_eval.json";
pub const CHECKPOINT: &str = "model.ckpt";
pub const HISTORY: &str = "history.csv";
pub const OPERATING_POINTS: &str = "operating_points.csv";
pub const SWEEP_REPORT: &str = "sweep_report.csv";
pub const ADAPT_REPORT: &str = "adapt_report.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    GenData,
    Train,
    SweepMargins,
    Adapt,
    Eval,
    AnalyzeFeatures,
}

/// Everything a command reads besides the filesystem inputs it names.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub config: ExperimentConfig,
    pub out: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub command: CommandKind,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::parse(path, e))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::parse(path, e))?;
    writeln!(w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_manifest(inv: &Invocation, command: CommandKind) -> Result<()> {
    let mut config = inv.config.clone();
    config.output_dir = None;
    let manifest = Manifest {
        command,
        seed: config.seed,
        checkpoint: inv.checkpoint.clone(),
        data: inv.data.clone(),
        config,
    };
    write_json(&inv.out.join(MANIFEST), &manifest)
}

pub fn write_data_bundle(dir: &Path, data: &ExperimentData) -> Result<()> {
    create_dir(dir)?;
    write_json(&dir.join(UNIVERSE), &data.universe)?;
    write_dataset(&dir.join(BONA_FIDE_TRAIN), &data.train_bona_fides)?;
    write_dataset(&dir.join(BONA_FIDE_HELDOUT), &data.heldout)?;
    write_dataset(&dir.join(TRAINING_SET), &data.training_set)?;
    write_protocol(&dir.join(PROTOCOL_TRAIN), &data.train_protocol, &data.universe)?;
    write_protocol(&dir.join(PROTOCOL_EVAL), &data.eval_protocol, &data.universe)
}

pub fn read_data_bundle(dir: &Path) -> Result<ExperimentData> {
    let path = dir.join(UNIVERSE);
    let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
    let universe: IdentityUniverse =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::parse(&path, e))?;
    let data = ExperimentData {
        universe,
        train_bona_fides: read_dataset(&dir.join(BONA_FIDE_TRAIN))?,
        heldout: read_dataset(&dir.join(BONA_FIDE_HELDOUT))?,
        train_protocol: read_protocol(&dir.join(PROTOCOL_TRAIN))?,
        eval_protocol: read_protocol(&dir.join(PROTOCOL_EVAL))?,
        training_set: read_dataset(&dir.join(TRAINING_SET))?,
    };
    data.validate().map_err(|e| e.context(format!("data bundle {}", dir.display())))?;
    Ok(data)
}

fn load_data(inv: &Invocation) -> Result<ExperimentData> {
    let data = match &inv.data {
        Some(dir) => read_data_bundle(dir)?,
        None => prepare_data(&inv.config)?,
    };
    let cfg = &inv.config.data;
    if data.universe.input_dim() != cfg.input_dim || data.universe.num_classes() != cfg.num_classes {
        return Err(Error::Protocol(format!(
            "data has {} classes of dimension {}, config expects {} of dimension {}",
            data.universe.num_classes(),
            data.universe.input_dim(),
            cfg.num_classes,
            cfg.input_dim
        )));
    }
    Ok(data)
}

fn require_checkpoint(inv: &Invocation) -> Result<DualHeadModel> {
    let path = inv
        .checkpoint
        .as_ref()
        .ok_or_else(|| Error::Config("this command needs --checkpoint".into()))?;
    load_checkpoint(path)
}

/// `epoch,lr,loss`, one row per epoch.
pub fn write_history_csv(path: &Path, history: &TrainHistory) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e))?;
    w.write_record(["epoch", "lr", "loss"]).map_err(|e| Error::parse(path, e))?;
    for (k, (lr, loss)) in history.epoch_lr.iter().zip(&history.epoch_loss).enumerate() {
        w.serialize((k, lr, loss)).map_err(|e| Error::parse(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Scores, trials, the four curves and the operating points of one evaluation.
pub fn write_evaluation(dir: &Path, ev: &Evaluation) -> Result<()> {
    create_dir(dir)?;
    write_scores_csv(&dir.join("scores.csv"), &ev.scores)?;
    write_trials_json(&dir.join("trials.json"), &ev.trials)?;
    write_curve_csv(&dir.join("fnmr.csv"), &ev.fnmr_curve)?;
    write_curve_csv(&dir.join("fmr.csv"), &ev.fmr_curve)?;
    write_curve_csv(&dir.join("mmpmr.csv"), &ev.mmpmr_curve)?;
    write_curve_csv(&dir.join("rmmr.csv"), &ev.rmmr_curve)?;
    write_operating_points_csv(&dir.join(OPERATING_POINTS), &ev.rows())
}

/// `<key>,metric,target,achieved,threshold,value` over several evaluations.
fn write_report(path: &Path, key: &str, entries: &[(String, &Evaluation)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e))?;
    w.write_record([key, "metric", "target", "achieved", "threshold", "value"])
        .map_err(|e| Error::parse(path, e))?;
    for (label, ev) in entries {
        for r in ev.rows() {
            w.serialize((label, &r.metric, r.target, r.achieved, r.threshold, r.value))
                .map_err(|e| Error::parse(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn cmd_gen_data(inv: &Invocation) -> Result<()> {
    let data = prepare_data(&inv.config)?;
    write_data_bundle(&inv.out, &data)?;
    write_manifest(inv, CommandKind::GenData)
}

pub fn cmd_train(inv: &Invocation) -> Result<()> {
    let data = load_data(inv)?;
    let (model, history) = train_model(&inv.config, &data.training_set, &inv.config.train)?;
    create_dir(&inv.out)?;
    save_checkpoint(&model, &inv.out.join(CHECKPOINT))?;
    write_history_csv(&inv.out.join(HISTORY), &history)?;
    write_manifest(inv, CommandKind::Train)
}

/// Directory name of one sweep entry, e.g. `margin_-0.1`.
pub fn margin_dir_name(offset: f64) -> String {
    format!("margin_{offset}")
}

pub fn cmd_sweep_margins(inv: &Invocation) -> Result<()> {
    let data = load_data(inv)?;
    let entries = sweep_margins(&inv.config, &data, inv.parallel)?;
    create_dir(&inv.out)?;
    for e in &entries {
        let dir = inv.out.join(margin_dir_name(e.morph_offset));
        write_evaluation(&dir, &e.evaluation)?;
        save_checkpoint(&e.model, &dir.join(CHECKPOINT))?;
        write_history_csv(&dir.join(HISTORY), &e.history)?;
    }
    let report: Vec<(String, &Evaluation)> = entries
        .iter()
        .map(|e| (e.morph_offset.to_string(), &e.evaluation))
        .collect();
    write_report(&inv.out.join(SWEEP_REPORT), "morph_margin", &report)?;
    write_manifest(inv, CommandKind::SweepMargins)
}

pub fn cmd_adapt(inv: &Invocation) -> Result<()> {
    let pretrained = match &inv.checkpoint {
        Some(path) => Some(load_checkpoint(path)?),
        None => None,
    };
    let data = load_data(inv)?;
    let outcome = adapt_two_stage(&inv.config, &data, pretrained)?;
    let (d1, d2) = (inv.out.join("stage1"), inv.out.join("stage2"));
    write_evaluation(&d1, &outcome.stage1_eval)?;
    save_checkpoint(&outcome.stage1_model, &d1.join(CHECKPOINT))?;
    if let Some(h) = &outcome.stage1_history {
        write_history_csv(&d1.join(HISTORY), h)?;
    }
    write_evaluation(&d2, &outcome.stage2_eval)?;
    save_checkpoint(&outcome.stage2_model, &d2.join(CHECKPOINT))?;
    write_history_csv(&d2.join(HISTORY), &outcome.stage2_history)?;
    write_report(
        &inv.out.join(ADAPT_REPORT),
        "stage",
        &[("1".into(), &outcome.stage1_eval), ("2".into(), &outcome.stage2_eval)],
    )?;
    write_manifest(inv, CommandKind::Adapt)
}

pub fn cmd_eval(inv: &Invocation) -> Result<()> {
    let model = require_checkpoint(inv)?;
    let data = load_data(inv)?;
    let ev = evaluate(&model, &data, &inv.config)?;
    write_evaluation(&inv.out, &ev)?;
    write_manifest(inv, CommandKind::Eval)
}

pub fn cmd_analyze_features(inv: &Invocation) -> Result<()> {
    let model = require_checkpoint(inv)?;
    let data = load_data(inv)?;
    let cfg = &inv.config;
    let spread = &morph_spread_with(&eval_triplets(&data, cfg)?, &model, cfg.eval.align_mode, cfg.eval.ellipse_level)?;
    create_dir(&inv.out)?;
    write_cloud_csv(&inv.out.join("cloud.csv"), &spread.aligned)?;
    write_ellipse_csv(&inv.out.join("ellipse.csv"), &[spread.ellipse])?;
    let svg = render_svg(&spread.aligned, &spread.ellipse, "aligned morph features");
    let path = inv.out.join("features.svg");
    std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
    write_manifest(inv, CommandKind::AnalyzeFeatures)
}

pub fn run(command: CommandKind, inv: &Invocation) -> Result<()> {
    inv.config.validate()?;
    match command {
        CommandKind::GenData => cmd_gen_data(inv),
        CommandKind::Train => cmd_train(inv),
        CommandKind::SweepMargins => cmd_sweep_margins(inv),
        CommandKind::Adapt => cmd_adapt(inv),
        CommandKind::Eval => cmd_eval(inv),
        CommandKind::AnalyzeFeatures => cmd_analyze_features(inv),
    }
}
