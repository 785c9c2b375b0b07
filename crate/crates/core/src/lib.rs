//! Desk-scale laboratory for morph-aware face-recognition training.
//!
//! * [`loss`]: softmax, additive angular margin softmax and the dual-branch
//!   morph margin loss, with analytic gradients.
//! * [`encoder`]: an MLP encoder with two cosine class heads, reverse-mode
//!   backpropagation and SGD with linear learning-rate decay.
//! * [`datagen`]: synthetic identities, the disjoint-subset morph pairing
//!   protocol, morphs and selfmorphs.
//! * [`metrics`]: FMR/FNMR curves, MMPMR, RMMR and operating points.
//! * [`featviz`]: 2D alignment of (bona fide, bona fide, morph) triplets and
//!   the confidence-ellipse spread statistic.
//! * [`cli`]: experiment configuration and the pipelines behind the
//!   `morphguard` binary.

pub mod cli;
pub mod datagen;
pub mod encoder;
pub mod error;
pub mod featviz;
pub mod linalg;
pub mod loss;
pub mod metrics;
pub mod rng;

pub use error::{Error, ErrorClass, Result};
