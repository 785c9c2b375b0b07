//! In-memory experiment pipelines.
//!
//! Every random decision draws from a stream derived from the master seed:
//!
//! | stream | use |
//! |---|---|
//! | 1 | identity prototypes and sample noise |
//! | 2 | held-out split |
//! | 3 | training morph protocol |
//! | 4 | selfmorph draws |
//! | 5 | evaluation morph protocol |
//! | 6 | model initialization |
//! | 7 | training / stage-1 batch order |
//! | 8 | stage-2 batch order |
//! | 9 | verification pairs and morph probes |

use crate::datagen::{
    build_training_set, make_morph, pair_protocol, synth_identities, IdentityUniverse, MorphPairProtocol, Sample,
};
use crate::encoder::{adapt, init_model, train, DualHeadModel, TrainHistory};
use crate::error::{Error, Result};
use crate::featviz::{morph_spread_with, MorphSpread, Triplet};
use crate::metrics::{
    candidate_thresholds, cosine_similarity, fnmr_at_fmr, fnmr_fmr_curves, min_rmmr, mmpmr_at_fnmr, mmpmr_curve,
    rmmr_curve, MmpmrAtFnmr, MorphTrial, OperatingPoint, OperatingPointRow, RmmrMinimum, ThresholdCurve,
    VerificationSet,
};
use crate::rng::{derive_seed, SeededRng};

use super::config::{ExperimentConfig, StageConfig};

pub const STREAM_IDENTITIES: u64 = 1;
pub const STREAM_HELDOUT: u64 = 2;
pub const STREAM_TRAIN_PROTOCOL: u64 = 3;
pub const STREAM_SELFMORPHS: u64 = 4;
pub const STREAM_EVAL_PROTOCOL: u64 = 5;
pub const STREAM_INIT: u64 = 6;
pub const STREAM_ORDER: u64 = 7;
pub const STREAM_ADAPT_ORDER: u64 = 8;
pub const STREAM_EVAL: u64 = 9;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentData {
    pub universe: IdentityUniverse,
    pub train_bona_fides: Vec<Sample>,
    pub heldout: Vec<Sample>,
    /// Pairs index `train_bona_fides`.
    pub train_protocol: MorphPairProtocol,
    /// Pairs index `heldout`.
    pub eval_protocol: MorphPairProtocol,
    /// Morph-augmented training set.
    pub training_set: Vec<Sample>,
}

impl ExperimentData {
    pub fn validate(&self) -> Result<()> {
        let c = self.universe.num_classes();
        for (name, set) in [
            ("bona fide training", &self.train_bona_fides),
            ("held-out", &self.heldout),
            ("training", &self.training_set),
        ] {
            for (i, s) in set.iter().enumerate() {
                s.validate_in(&self.universe)
                    .map_err(|e| e.context(format!("{name} sample {i}")))?;
            }
        }
        for (name, protocol, pool) in [
            ("training protocol", &self.train_protocol, &self.train_bona_fides),
            ("evaluation protocol", &self.eval_protocol, &self.heldout),
        ] {
            protocol.validate(&self.universe).map_err(|e| e.context(name))?;
            for p in &protocol.pairs {
                let ok = |idx: usize, id: usize| pool.get(idx).and_then(Sample::identity) == Some(id);
                if !ok(p.sample_a, p.identity_a) || !ok(p.sample_b, p.identity_b) {
                    return Err(Error::Protocol(format!(
                        "{name}: pair ({}, {}) does not match its sample pool",
                        p.sample_a, p.sample_b
                    )));
                }
            }
        }
        if self.universe.subsets.len() != c {
            return Err(Error::Protocol("identity split does not cover every class".into()));
        }
        Ok(())
    }
}

/// Synthesizes identities, splits off the held-out samples, draws both
/// morph protocols and assembles the morph-augmented training set.
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<ExperimentData> {
    cfg.validate()?;
    let d = &cfg.data;
    let (universe, samples) = synth_identities(
        d.num_classes,
        d.samples_per_class,
        d.input_dim,
        d.spread,
        derive_seed(cfg.seed, STREAM_IDENTITIES),
    )?;

    let held = d.heldout_per_class();
    let mut rng = SeededRng::new(derive_seed(cfg.seed, STREAM_HELDOUT));
    let mut train_bona_fides = Vec::with_capacity(samples.len());
    let mut heldout = Vec::with_capacity(held * d.num_classes);
    for class_samples in samples.chunks(d.samples_per_class) {
        let mut idx: Vec<usize> = (0..class_samples.len()).collect();
        rng.shuffle(&mut idx);
        let (h, t) = idx.split_at_mut(held);
        h.sort_unstable();
        t.sort_unstable();
        heldout.extend(h.iter().map(|&i| class_samples[i].clone()));
        train_bona_fides.extend(t.iter().map(|&i| class_samples[i].clone()));
    }

    let [_, n_morph, _] = d.ratios.counts(train_bona_fides.len(), 0);
    let train_protocol = pair_protocol(
        &universe,
        &train_bona_fides,
        n_morph,
        derive_seed(cfg.seed, STREAM_TRAIN_PROTOCOL),
    )?;
    let training_set = build_training_set(
        &universe,
        &train_bona_fides,
        &train_protocol,
        d.ratios,
        d.morph_alpha,
        derive_seed(cfg.seed, STREAM_SELFMORPHS),
    )?;
    let eval_protocol = pair_protocol(
        &universe,
        &heldout,
        cfg.eval.eval_morphs,
        derive_seed(cfg.seed, STREAM_EVAL_PROTOCOL),
    )?;
    Ok(ExperimentData {
        universe,
        train_bona_fides,
        heldout,
        train_protocol,
        eval_protocol,
        training_set,
    })
}

/// Fresh model from the configured architecture and the master seed.
pub fn initial_model(cfg: &ExperimentConfig) -> Result<DualHeadModel> {
    init_model(
        cfg.data.input_dim,
        &cfg.model.hidden_dims,
        cfg.model.embedding_dim,
        cfg.data.num_classes,
        derive_seed(cfg.seed, STREAM_INIT),
    )
}

/// Trains a fresh model on `dataset` with `stage`.
pub fn train_model(
    cfg: &ExperimentConfig,
    dataset: &[Sample],
    stage: &StageConfig,
) -> Result<(DualHeadModel, TrainHistory)> {
    let model = initial_model(cfg)?;
    train(model, dataset, &stage.to_train_config(derive_seed(cfg.seed, STREAM_ORDER)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub scores: VerificationSet,
    pub trials: Vec<MorphTrial>,
    pub fnmr_curve: ThresholdCurve,
    pub fmr_curve: ThresholdCurve,
    /// MMPMR over every observed score.
    pub mmpmr_curve: ThresholdCurve,
    pub rmmr_curve: ThresholdCurve,
    pub mmpmr_at_fnmr: Vec<MmpmrAtFnmr>,
    /// `(target FMR, operating point, FNMR there)`.
    pub fnmr_at_fmr: Vec<(f64, OperatingPoint, f64)>,
    pub min_rmmr: RmmrMinimum,
    pub spread: MorphSpread,
}

impl Evaluation {
    /// Headline numbers: MMPMR per FNMR target, FNMR per FMR target,
    /// min-RMMR and the morph ellipse size.
    pub fn rows(&self) -> Vec<OperatingPointRow> {
        let mut rows = Vec::with_capacity(self.mmpmr_at_fnmr.len() + self.fnmr_at_fmr.len() + 2);
        for m in &self.mmpmr_at_fnmr {
            rows.push(OperatingPointRow {
                metric: "mmpmr@fnmr".into(),
                target: Some(m.target),
                achieved: Some(m.achieved_fnmr),
                threshold: Some(m.threshold),
                value: m.mmpmr,
            });
        }
        for (target, op, fnmr) in &self.fnmr_at_fmr {
            rows.push(OperatingPointRow {
                metric: "fnmr@fmr".into(),
                target: Some(*target),
                achieved: Some(op.achieved),
                threshold: Some(op.threshold),
                value: *fnmr,
            });
        }
        rows.push(OperatingPointRow {
            metric: "min_rmmr".into(),
            target: None,
            achieved: None,
            threshold: Some(self.min_rmmr.threshold),
            value: self.min_rmmr.value,
        });
        rows.push(OperatingPointRow {
            metric: "ellipse_size".into(),
            target: None,
            achieved: None,
            threshold: None,
            value: self.spread.size(),
        });
        rows
    }

    /// MMPMR at the given FNMR target, if it was evaluated.
    pub fn mmpmr_at(&self, target: f64) -> Option<f64> {
        self.mmpmr_at_fnmr.iter().find(|m| m.target == target).map(|m| m.mmpmr)
    }
}

/// Input-space (parent A, parent B, morph) triplets of the evaluation protocol.
pub fn eval_triplets(data: &ExperimentData, cfg: &ExperimentConfig) -> Result<Vec<Triplet>> {
    data.eval_protocol
        .pairs
        .iter()
        .map(|p| {
            let (a, b) = (&data.heldout[p.sample_a], &data.heldout[p.sample_b]);
            Ok(Triplet {
                bona_a: a.input.clone(),
                bona_b: b.input.clone(),
                morph: make_morph(&data.universe, a, b, cfg.data.morph_alpha)?.input,
            })
        })
        .collect()
}

fn pick_other(rng: &mut SeededRng, members: &[usize], exclude: usize) -> Result<usize> {
    let others: Vec<usize> = members.iter().copied().filter(|&i| i != exclude).collect();
    if others.is_empty() {
        return Err(Error::Protocol(format!(
            "held-out sample {exclude} has no other sample of its identity to probe with"
        )));
    }
    Ok(others[rng.below(others.len())])
}

/// Verification scores and morph trials over the held-out data.
///
/// Genuine pairs pick an identity uniformly and two distinct held-out
/// samples of it; impostor pairs pick two held-out samples of different
/// identities. Each evaluation morph is scored against a held-out sample
/// of each parent other than the one it was built from. The draws depend
/// only on the data and the seed, never on the model.
pub fn evaluate(model: &DualHeadModel, data: &ExperimentData, cfg: &ExperimentConfig) -> Result<Evaluation> {
    if model.input_dim() != data.universe.input_dim() {
        return Err(Error::Protocol(format!(
            "model expects {}-dimensional inputs but the data has {}",
            model.input_dim(),
            data.universe.input_dim()
        )));
    }
    let c = data.universe.num_classes();
    let mut by_identity: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (i, s) in data.heldout.iter().enumerate() {
        let id = s
            .identity()
            .ok_or_else(|| Error::Protocol(format!("held-out sample {i} is not a bona fide")))?;
        by_identity
            .get_mut(id)
            .ok_or(Error::Index { index: id, len: c })?
            .push(i);
    }
    let populated: Vec<usize> = (0..c).filter(|&id| by_identity[id].len() >= 2).collect();
    if populated.is_empty() || by_identity.iter().filter(|m| !m.is_empty()).count() < 2 {
        return Err(Error::Protocol("held-out data cannot form genuine and impostor pairs".into()));
    }

    let embeddings = data
        .heldout
        .iter()
        .map(|s| model.embed(&s.input))
        .collect::<Result<Vec<_>>>()?;
    let score = |i: usize, j: usize| cosine_similarity(&embeddings[i], &embeddings[j]);

    let mut rng = SeededRng::new(derive_seed(cfg.seed, STREAM_EVAL));
    let mut scores = VerificationSet::default();
    for _ in 0..cfg.eval.genuine_pairs {
        let members = &by_identity[populated[rng.below(populated.len())]];
        let i = members[rng.below(members.len())];
        let j = pick_other(&mut rng, members, i)?;
        scores.genuine.push(score(i, j)?);
    }
    let n = data.heldout.len();
    while scores.impostor.len() < cfg.eval.impostor_pairs {
        let (i, j) = (rng.below(n), rng.below(n));
        if data.heldout[i].identity() != data.heldout[j].identity() {
            scores.impostor.push(score(i, j)?);
        }
    }

    let triplets = eval_triplets(data, cfg)?;
    let mut trials = Vec::with_capacity(triplets.len());
    for (k, (p, t)) in data.eval_protocol.pairs.iter().zip(&triplets).enumerate() {
        let e = model.embed(&t.morph)?;
        let probe_a = pick_other(&mut rng, &by_identity[p.identity_a], p.sample_a)?;
        let probe_b = pick_other(&mut rng, &by_identity[p.identity_b], p.sample_b)?;
        trials.push(MorphTrial {
            morph_id: k as u64,
            subject_scores: vec![
                cosine_similarity(&e, &embeddings[probe_a])?,
                cosine_similarity(&e, &embeddings[probe_b])?,
            ],
        });
    }

    let (fnmr_curve, fmr_curve) = fnmr_fmr_curves(&scores)?;
    let grid = candidate_thresholds(
        scores
            .genuine
            .iter()
            .chain(&scores.impostor)
            .chain(trials.iter().flat_map(|t| &t.subject_scores)),
    );
    let mmpmr_curve = mmpmr_curve(&trials, &grid)?;
    let rmmr_curve = rmmr_curve(&trials, &scores)?;
    let mmpmr_at_fnmr = mmpmr_at_fnmr(&trials, &scores, &cfg.eval.fnmr_targets)?;
    let fnmr_at_fmr = fnmr_at_fmr(&scores, &cfg.eval.fmr_targets)?;
    let min_rmmr = min_rmmr(&trials, &scores)?;
    let spread = morph_spread_with(&triplets, model, cfg.eval.align_mode, cfg.eval.ellipse_level)?;
    Ok(Evaluation {
        scores,
        trials,
        fnmr_curve,
        fmr_curve,
        mmpmr_curve,
        rmmr_curve,
        mmpmr_at_fnmr,
        fnmr_at_fmr,
        min_rmmr,
        spread,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub morph_offset: f64,
    pub model: DualHeadModel,
    pub history: TrainHistory,
    pub evaluation: Evaluation,
}

fn sweep_one(cfg: &ExperimentConfig, data: &ExperimentData, offset: f64) -> Result<SweepEntry> {
    let stage = cfg.train.with_morph_offset(offset);
    let run = || -> Result<SweepEntry> {
        let (model, history) = train_model(cfg, &data.training_set, &stage)?;
        let evaluation = evaluate(&model, data, cfg)?;
        Ok(SweepEntry {
            morph_offset: offset,
            model,
            history,
            evaluation,
        })
    };
    run().map_err(|e| e.context(format!("morph margin offset {offset}")))
}

/// Trains and evaluates one fresh model per grid value, all from the same
/// initialization and batch order. With `parallel` the entries run on
/// separate threads; results are identical to the serial run.
pub fn sweep_margins(cfg: &ExperimentConfig, data: &ExperimentData, parallel: bool) -> Result<Vec<SweepEntry>> {
    cfg.validate()?;
    let grid = &cfg.sweep.margin_grid;
    if !parallel {
        return grid.iter().map(|&m| sweep_one(cfg, data, m)).collect();
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = grid
            .iter()
            .map(|&m| scope.spawn(move || sweep_one(cfg, data, m)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptOutcome {
    pub stage1_model: DualHeadModel,
    /// `None` when stage 1 came from a checkpoint.
    pub stage1_history: Option<TrainHistory>,
    pub stage1_eval: Evaluation,
    pub stage2_model: DualHeadModel,
    pub stage2_history: TrainHistory,
    pub stage2_eval: Evaluation,
}

/// Stage 1 trains on bona fides only (or takes `pretrained`); stage 2
/// continues on the morph-augmented training set.
pub fn adapt_two_stage(
    cfg: &ExperimentConfig,
    data: &ExperimentData,
    pretrained: Option<DualHeadModel>,
) -> Result<AdaptOutcome> {
    cfg.validate()?;
    let (stage1_model, stage1_history) = match pretrained {
        Some(model) => (model, None),
        None => {
            let (m, h) = train_model(cfg, &data.train_bona_fides, &cfg.adapt.stage1)
                .map_err(|e| e.context("stage 1"))?;
            (m, Some(h))
        }
    };
    let stage1_eval = evaluate(&stage1_model, data, cfg).map_err(|e| e.context("stage 1 evaluation"))?;
    let (stage2_model, stage2_history) = adapt(
        stage1_model.clone(),
        &data.training_set,
        data.universe.num_classes(),
        &cfg.adapt.stage2.to_train_config(derive_seed(cfg.seed, STREAM_ADAPT_ORDER)),
    )
    .map_err(|e| e.context("stage 2"))?;
    let stage2_eval = evaluate(&stage2_model, data, cfg).map_err(|e| e.context("stage 2 evaluation"))?;
    Ok(AdaptOutcome {
        stage1_model,
        stage1_history,
        stage1_eval,
        stage2_model,
        stage2_history,
        stage2_eval,
    })
}
