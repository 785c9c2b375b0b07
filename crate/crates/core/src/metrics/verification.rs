use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};

pub fn cosine_similarity(e1: &[f64], e2: &[f64]) -> Result<f64> {
    if e1.len() != e2.len() {
        return Err(Error::NumericInput(format!("dimension mismatch {} vs {}", e1.len(), e2.len())));
    }
    for e in [e1, e2] {
        let n = norm(e);
        if !((n - 1.0).abs() <= 1e-9) {
            return Err(Error::NumericInput(format!("vector norm {n} is not 1")));
        }
    }
    Ok(dot(e1, e2).clamp(-1.0, 1.0))
}

/// Genuine (same identity) and impostor (different identity) comparison scores.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VerificationSet {
    pub genuine: Vec<f64>,
    pub impostor: Vec<f64>,
}

impl VerificationSet {
    pub fn validate(&self) -> Result<()> {
        if self.genuine.is_empty() || self.impostor.is_empty() {
            return Err(Error::Config("verification set needs genuine and impostor scores".into()));
        }
        check_scores(self.genuine.iter().chain(&self.impostor))
    }
}

pub(crate) fn check_scores<'a>(scores: impl IntoIterator<Item = &'a f64>) -> Result<()> {
    for &s in scores {
        if !(-1.0..=1.0).contains(&s) {
            return Err(Error::NumericInput(format!("similarity score {s} outside [-1, 1]")));
        }
    }
    Ok(())
}

/// A rate sampled at strictly increasing thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCurve {
    pub thresholds: Vec<f64>,
    pub values: Vec<f64>,
}

impl ThresholdCurve {
    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.thresholds.iter().copied().zip(self.values.iter().copied())
    }
}

/// Sorted distinct scores with -1 and +1 added. Negative zero is stored
/// as `0.0`, so the grid never holds two encodings of one threshold.
pub fn candidate_thresholds<'a>(scores: impl IntoIterator<Item = &'a f64>) -> Vec<f64> {
    let mut grid: Vec<f64> = scores.into_iter().map(|s| s + 0.0).chain([-1.0, 1.0]).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Number of values in ascending `sorted` that are `<= tau`.
pub(crate) fn count_at_most(sorted: &[f64], tau: f64) -> usize {
    sorted.partition_point(|&s| s <= tau)
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub(crate) fn fnmr_at(sorted_genuine: &[f64], tau: f64) -> f64 {
    count_at_most(sorted_genuine, tau) as f64 / sorted_genuine.len() as f64
}

pub(crate) fn fmr_at(sorted_impostor: &[f64], tau: f64) -> f64 {
    (sorted_impostor.len() - count_at_most(sorted_impostor, tau)) as f64 / sorted_impostor.len() as f64
}

/// FNMR(τ) = #{genuine ≤ τ}/|genuine| and FMR(τ) = #{impostor > τ}/|impostor|
/// over the candidate grid of all observed scores.
pub fn fnmr_fmr_curves(set: &VerificationSet) -> Result<(ThresholdCurve, ThresholdCurve)> {
    set.validate()?;
    let thresholds = candidate_thresholds(set.genuine.iter().chain(&set.impostor));
    let genuine = sorted(&set.genuine);
    let impostor = sorted(&set.impostor);
    let fnmr = thresholds.iter().map(|&t| fnmr_at(&genuine, t)).collect();
    let fmr = thresholds.iter().map(|&t| fmr_at(&impostor, t)).collect();
    Ok((
        ThresholdCurve {
            thresholds: thresholds.clone(),
            values: fnmr,
        },
        ThresholdCurve {
            thresholds,
            values: fmr,
        },
    ))
}

/// How an operating point is located on a monotone curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Non-decreasing curve (FNMR): the strictest threshold whose value does
    /// not exceed the target, i.e. the rate approaches the target from below.
    FromBelow,
    /// Non-increasing curve (FMR): the most lenient threshold whose value
    /// does not exceed the target, approached from above.
    FromAbove,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub threshold: f64,
    /// Curve value actually achieved at `threshold`.
    pub achieved: f64,
}

/// Locates the operating point `value ≤ target` on a grid curve without
/// interpolation.
///
/// For [`Direction::FromAbove`] this is the smallest threshold meeting the
/// target. For [`Direction::FromBelow`] it is the largest grid threshold
/// meeting it, which is the smallest threshold of the last plateau that does
/// not exceed the target; every threshold on that plateau yields the same
/// rates.
pub fn threshold_at(curve: &ThresholdCurve, target: f64, direction: Direction) -> Result<OperatingPoint> {
    if !(0.0..=1.0).contains(&target) {
        return Err(Error::Config(format!("target rate {target} outside [0, 1]")));
    }
    if curve.is_empty() || curve.thresholds.len() != curve.values.len() {
        return Err(Error::Config("curve is empty or malformed".into()));
    }
    let hit = match direction {
        Direction::FromBelow => curve.values.iter().rposition(|&v| v <= target),
        Direction::FromAbove => curve.values.iter().position(|&v| v <= target),
    };
    match hit {
        Some(i) => Ok(OperatingPoint {
            threshold: curve.thresholds[i],
            achieved: curve.values[i],
        }),
        None => Err(Error::Unattainable {
            metric: match direction {
                Direction::FromBelow => "FNMR",
                Direction::FromAbove => "FMR",
            },
            target,
            closest: curve.values.iter().copied().fold(f64::INFINITY, f64::min),
        }),
    }
}

/// FNMR at the FMR operating points `targets`: `(target, point, fnmr)`.
pub fn fnmr_at_fmr(set: &VerificationSet, targets: &[f64]) -> Result<Vec<(f64, OperatingPoint, f64)>> {
    let (fnmr, fmr) = fnmr_fmr_curves(set)?;
    targets
        .iter()
        .map(|&t| {
            let op = threshold_at(&fmr, t, Direction::FromAbove)?;
            let i = fmr.thresholds.partition_point(|&x| x < op.threshold);
            Ok((t, op, fnmr.values[i]))
        })
        .collect()
}
