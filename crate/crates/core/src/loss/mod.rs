//! Softmax, additive-angular-margin softmax and the dual-branch morph loss.
//!
//! All quantities are computed on unit-normalized embeddings and
//! row-normalized class weights, so every logit is a cosine in `[-1, 1]`
//! before scaling.

mod margin;
mod morph;
mod softmax;
mod types;

pub use margin::{cosine_logits, cosine_logits_with_norms, margin_adjust, margin_adjust_grad, margin_softmax_ce};
pub use morph::{morphguard_loss, BranchCosines, MorphGuardOutput};
pub use softmax::{softmax, softmax_ce};
pub use types::{CosineLogits, LabelPair, MarginConfig, SampleKind};

/// Tolerance band for cosines that drift past ±1 through rounding.
pub const COSINE_TOLERANCE: f64 = 1e-9;

/// Cosines within this distance of ±1 use the clamped derivative branch.
pub const DERIVATIVE_BAND: f64 = 1e-9;
