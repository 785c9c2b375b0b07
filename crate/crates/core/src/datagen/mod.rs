//! Synthetic identities, the disjoint-subset morph pairing protocol and
//! morph / selfmorph sample construction.
//!
//! Identities are split into two subsets. Morphs are only ever built from
//! one parent of each subset, and the subset decides the head: the subset-1
//! parent is the head-1 target (`y_dot`), the subset-2 parent the head-2
//! target (`y_ddot`). This keeps both heads' targets unambiguous.

mod io;
mod protocol;
mod synth;

use serde::{Deserialize, Serialize};

pub use io::{read_dataset, read_protocol, write_dataset, write_protocol, ProtocolRecord, SampleRecord};
pub use protocol::{make_morph, make_selfmorph, pair_protocol, MorphPair, MorphPairProtocol};
pub use synth::{build_training_set, split_identities, synth_identities, IdentityUniverse, MixRatios};

use crate::error::{Error, Result};
use crate::loss::{LabelPair, SampleKind};

/// Which half of the identity partition an identity belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Subset {
    First,
    Second,
}

impl From<Subset> for u8 {
    fn from(s: Subset) -> u8 {
        match s {
            Subset::First => 1,
            Subset::Second => 2,
        }
    }
}

impl TryFrom<u8> for Subset {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Subset::First),
            2 => Ok(Subset::Second),
            other => Err(format!("subset must be 1 or 2, got {other}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub labels: LabelPair,
    /// One identity for bona fides and selfmorphs; for morphs the subset-1
    /// parent followed by the subset-2 parent.
    pub source_ids: Vec<usize>,
}

impl Sample {
    pub fn bona_fide(input: Vec<f64>, identity: usize) -> Self {
        Self {
            input,
            labels: LabelPair::bona_fide(identity),
            source_ids: vec![identity],
        }
    }

    pub fn kind(&self) -> SampleKind {
        self.labels.kind
    }

    /// Identity of a single-source sample.
    pub fn identity(&self) -> Option<usize> {
        match self.source_ids.as_slice() {
            [id] => Some(*id),
            _ => None,
        }
    }

    /// Checks the label / source-id invariants. Subset membership of morph
    /// parents is checked by [`Sample::validate_in`].
    pub fn validate(&self, num_classes: usize) -> Result<()> {
        self.labels.validate(num_classes)?;
        match (self.labels.kind, self.source_ids.as_slice()) {
            (SampleKind::BonaFide | SampleKind::SelfMorph, [id]) if *id == self.labels.y_dot => Ok(()),
            (SampleKind::Morph, [a, b]) if *a == self.labels.y_dot && *b == self.labels.y_ddot => Ok(()),
            _ => Err(Error::Protocol(format!(
                "{:?} sample has source ids {:?} inconsistent with labels ({}, {})",
                self.labels.kind, self.source_ids, self.labels.y_dot, self.labels.y_ddot
            ))),
        }
    }

    pub fn validate_in(&self, universe: &IdentityUniverse) -> Result<()> {
        self.validate(universe.num_classes())?;
        if self.kind() == SampleKind::Morph {
            let (a, b) = (self.source_ids[0], self.source_ids[1]);
            if universe.subset_of(a) != Subset::First || universe.subset_of(b) != Subset::Second {
                return Err(Error::Protocol(format!(
                    "morph parents {a} and {b} are not oriented subset 1 -> subset 2"
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn normalize_input(v: &[f64]) -> Result<Vec<f64>> {
    crate::linalg::normalized(v, 1e-12)
        .map(|(u, _)| u)
        .ok_or_else(|| Error::NumericInput("cannot normalize a zero input vector".into()))
}
