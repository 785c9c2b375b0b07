//! Verification and morph-robustness metrics.
//!
//! Every rate is piecewise constant between observed scores, so all curves
//! are evaluated on the grid of distinct observed scores plus the sentinels
//! -1 and +1. A comparison succeeds only when `score > τ`: a score equal to
//! the threshold is a non-match for verification and for morph attacks.

mod io;
mod morph;
mod verification;

pub use io::{
    read_scores_csv, read_trials_json, write_curve_csv, write_operating_points_csv, write_scores_csv,
    write_trials_json, OperatingPointRow,
};
pub use morph::{min_rmmr, mmpmr, mmpmr_at_fnmr, mmpmr_curve, rmmr, rmmr_curve, MmpmrAtFnmr, MorphTrial, RmmrMinimum};
pub use verification::{
    candidate_thresholds, cosine_similarity, fnmr_at_fmr, fnmr_fmr_curves, threshold_at, Direction, OperatingPoint,
    ThresholdCurve, VerificationSet,
};
