use serde::{Deserialize, Serialize};

use super::verification::{
    candidate_thresholds, check_scores, count_at_most, fnmr_at, threshold_at, Direction,
    ThresholdCurve, VerificationSet,
};
use crate::error::{Error, Result};

/// Similarity of one morph against each of its contributing subjects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorphTrial {
    pub morph_id: u64,
    pub subject_scores: Vec<f64>,
}

impl MorphTrial {
    /// The score every subject clears, i.e. the attack succeeds iff this is `> τ`.
    pub fn min_score(&self) -> f64 {
        self.subject_scores.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn trial_minima(trials: &[MorphTrial]) -> Result<Vec<f64>> {
    if trials.is_empty() {
        return Err(Error::Config("no morph trials".into()));
    }
    let mut mins = Vec::with_capacity(trials.len());
    for t in trials {
        if t.subject_scores.len() < 2 {
            return Err(Error::Config(format!(
                "morph {} has {} contributing subjects; at least 2 are required",
                t.morph_id,
                t.subject_scores.len()
            )));
        }
        check_scores(&t.subject_scores)?;
        mins.push(t.min_score());
    }
    mins.sort_by(f64::total_cmp);
    Ok(mins)
}

fn mmpmr_sorted(sorted_mins: &[f64], tau: f64) -> f64 {
    (sorted_mins.len() - count_at_most(sorted_mins, tau)) as f64 / sorted_mins.len() as f64
}

/// Fraction of morphs whose minimum subject score is strictly above `tau`.
pub fn mmpmr(trials: &[MorphTrial], tau: f64) -> Result<f64> {
    Ok(mmpmr_sorted(&trial_minima(trials)?, tau))
}

pub fn mmpmr_curve(trials: &[MorphTrial], thresholds: &[f64]) -> Result<ThresholdCurve> {
    if thresholds.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("thresholds must be strictly increasing".into()));
    }
    let mins = trial_minima(trials)?;
    Ok(ThresholdCurve {
        thresholds: thresholds.to_vec(),
        values: thresholds.iter().map(|&t| mmpmr_sorted(&mins, t)).collect(),
    })
}

/// `MMPMR + FNMR`, which equals `1 + MMPMR − TMR`.
pub fn rmmr(mmpmr_value: f64, fnmr_value: f64) -> Result<f64> {
    for (name, v) in [("MMPMR", mmpmr_value), ("FNMR", fnmr_value)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::NumericInput(format!("{name} {v} outside [0, 1]")));
        }
    }
    Ok(mmpmr_value + fnmr_value)
}

fn all_scores<'a>(trials: &'a [MorphTrial], set: &'a VerificationSet) -> impl Iterator<Item = &'a f64> {
    set.genuine
        .iter()
        .chain(&set.impostor)
        .chain(trials.iter().flat_map(|t| &t.subject_scores))
}

/// RMMR(τ) over the grid of every observed score plus sentinels.
pub fn rmmr_curve(trials: &[MorphTrial], set: &VerificationSet) -> Result<ThresholdCurve> {
    set.validate()?;
    let mins = trial_minima(trials)?;
    let mut genuine = set.genuine.clone();
    genuine.sort_by(f64::total_cmp);
    let thresholds = candidate_thresholds(all_scores(trials, set));
    let values = thresholds
        .iter()
        .map(|&t| mmpmr_sorted(&mins, t) + fnmr_at(&genuine, t))
        .collect();
    Ok(ThresholdCurve { thresholds, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmmrMinimum {
    pub threshold: f64,
    pub value: f64,
    pub mmpmr: f64,
    pub fnmr: f64,
}

/// Minimum of RMMR over the candidate grid; ties go to the smallest threshold.
pub fn min_rmmr(trials: &[MorphTrial], set: &VerificationSet) -> Result<RmmrMinimum> {
    set.validate()?;
    let mins = trial_minima(trials)?;
    let mut genuine = set.genuine.clone();
    genuine.sort_by(f64::total_cmp);
    let mut best: Option<RmmrMinimum> = None;
    for t in candidate_thresholds(all_scores(trials, set)) {
        let m = mmpmr_sorted(&mins, t);
        let f = fnmr_at(&genuine, t);
        let value = m + f;
        if best.is_none_or(|b| value < b.value) {
            best = Some(RmmrMinimum {
                threshold: t,
                value,
                mmpmr: m,
                fnmr: f,
            });
        }
    }
    // The grid always holds the two sentinels.
    best.ok_or_else(|| Error::Config("empty threshold grid".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmpmrAtFnmr {
    pub target: f64,
    pub achieved_fnmr: f64,
    pub threshold: f64,
    pub mmpmr: f64,
}

/// MMPMR at each FNMR operating point.
///
/// FNMR is sampled on the grid of every observed score (genuine, impostor
/// and morph) and the operating point is located with
/// [`Direction::FromBelow`]: the strictest grid threshold whose FNMR does
/// not exceed the target. Because MMPMR only changes at observed scores,
/// this is the lowest MMPMR reachable while keeping FNMR within target.
pub fn mmpmr_at_fnmr(trials: &[MorphTrial], set: &VerificationSet, targets: &[f64]) -> Result<Vec<MmpmrAtFnmr>> {
    set.validate()?;
    let mins = trial_minima(trials)?;
    let mut genuine = set.genuine.clone();
    genuine.sort_by(f64::total_cmp);
    let thresholds = candidate_thresholds(all_scores(trials, set));
    let fnmr = ThresholdCurve {
        values: thresholds.iter().map(|&t| fnmr_at(&genuine, t)).collect(),
        thresholds,
    };
    targets
        .iter()
        .map(|&target| {
            let op = threshold_at(&fnmr, target, Direction::FromBelow)
                .map_err(|e| e.context(format!("MMPMR at FNMR = {target}")))?;
            Ok(MmpmrAtFnmr {
                target,
                achieved_fnmr: op.achieved,
                threshold: op.threshold,
                mmpmr: mmpmr_sorted(&mins, op.threshold),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial(id: u64, scores: &[f64]) -> MorphTrial {
        MorphTrial {
            morph_id: id,
            subject_scores: scores.to_vec(),
        }
    }

    #[test]
    fn mmpmr_examples() {
        let trials = vec![trial(0, &[0.6, 0.9]), trial(1, &[0.8, 0.5]), trial(2, &[0.4, 0.45])];
        assert_eq!(mmpmr(&trials, 0.9).unwrap(), 0.0);
        assert_eq!(mmpmr(&trials, 0.3).unwrap(), 1.0);
        assert_eq!(mmpmr(&trials, 0.55).unwrap(), 1.0 / 3.0);
        // Strict inequality: a minimum equal to τ is not a successful attack.
        assert_eq!(mmpmr(&trials, 0.6).unwrap(), 0.0);
        assert!(mmpmr(&[], 0.0).is_err());
        assert!(mmpmr(&[trial(0, &[0.5])], 0.0).is_err());
    }

    #[test]
    fn single_trial_curve_is_a_step() {
        let trials = vec![trial(0, &[0.3, 0.7])];
        let curve = mmpmr_curve(&trials, &[-1.0, 0.0, 0.29, 0.3, 0.5, 1.0]).unwrap();
        assert_eq!(curve.values, vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        assert!(mmpmr_curve(&trials, &[0.5, 0.1]).is_err());
    }

    #[test]
    fn rmmr_examples() {
        assert_eq!(rmmr(0.2, 0.05).unwrap(), 0.25);
        assert_eq!(rmmr(0.0, 0.0).unwrap(), 0.0);
        assert!(rmmr(1.2, 0.0).is_err());
    }

    #[test]
    fn separable_instance() {
        let set = VerificationSet {
            genuine: vec![0.8, 0.85, 0.9, 0.95],
            impostor: vec![0.0, 0.1],
        };
        let trials = vec![trial(0, &[0.2, 0.6]), trial(1, &[0.3, 0.4])];
        let best = min_rmmr(&trials, &set).unwrap();
        assert_eq!(best.value, 0.0);
        assert!(best.threshold >= 0.3 && best.threshold < 0.8);
        let at = mmpmr_at_fnmr(&trials, &set, &[0.01, 1.0]).unwrap();
        assert_eq!(at[0].mmpmr, 0.0);
        assert_eq!(at[0].achieved_fnmr, 0.0);
        assert!(at[1].mmpmr <= 1.0);
    }

    #[test]
    fn tie_goes_to_the_smallest_threshold() {
        let set = VerificationSet {
            genuine: vec![0.5],
            impostor: vec![0.0],
        };
        // RMMR is 1 below 0.2, 0 on [0.2, 0.5) and 1 from 0.5 on.
        let trials = vec![trial(0, &[0.2, 0.2])];
        let best = min_rmmr(&trials, &set).unwrap();
        assert_eq!(best.value, 0.0);
        assert_eq!(best.threshold, 0.2);
    }
}
