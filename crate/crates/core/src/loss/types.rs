use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters of the dual-branch margin loss.
///
/// Morph samples are trained with margin `bona_fide + morph_offset`; every
/// other sample uses `bona_fide`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginConfig {
    /// Logit scale `s`.
    pub scale: f64,
    /// Angular margin for bona fide and selfmorph samples, radians.
    pub bona_fide: f64,
    /// Additive margin component applied on top of `bona_fide` for morphs.
    pub morph_offset: f64,
}

impl Default for MarginConfig {
    fn default() -> Self {
        Self {
            scale: 64.0,
            bona_fide: 0.5,
            morph_offset: 0.0,
        }
    }
}

impl MarginConfig {
    pub fn new(scale: f64, bona_fide: f64, morph_offset: f64) -> Result<Self> {
        let cfg = Self {
            scale,
            bona_fide,
            morph_offset,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Config(format!("scale must be positive, got {}", self.scale)));
        }
        if !(0.0..FRAC_PI_2).contains(&self.bona_fide) {
            return Err(Error::Config(format!(
                "bona fide margin must lie in [0, pi/2), got {}",
                self.bona_fide
            )));
        }
        let m = self.morph_margin();
        if !(m > -FRAC_PI_2 && m < FRAC_PI_2) {
            return Err(Error::Config(format!(
                "effective morph margin must lie in (-pi/2, pi/2), got {m}"
            )));
        }
        Ok(())
    }

    pub fn morph_margin(&self) -> f64 {
        self.bona_fide + self.morph_offset
    }

    pub fn margin_for(&self, kind: SampleKind) -> f64 {
        match kind {
            SampleKind::Morph => self.morph_margin(),
            SampleKind::BonaFide | SampleKind::SelfMorph => self.bona_fide,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    BonaFide,
    Morph,
    #[serde(rename = "selfmorph")]
    SelfMorph,
}

/// Per-head targets of one sample: `y_dot` for head 1, `y_ddot` for head 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelPair {
    pub y_dot: usize,
    pub y_ddot: usize,
    pub kind: SampleKind,
}

impl LabelPair {
    pub fn bona_fide(class: usize) -> Self {
        Self {
            y_dot: class,
            y_ddot: class,
            kind: SampleKind::BonaFide,
        }
    }

    pub fn self_morph(class: usize) -> Self {
        Self {
            y_dot: class,
            y_ddot: class,
            kind: SampleKind::SelfMorph,
        }
    }

    pub fn morph(y_dot: usize, y_ddot: usize) -> Self {
        Self {
            y_dot,
            y_ddot,
            kind: SampleKind::Morph,
        }
    }

    pub fn validate(&self, num_classes: usize) -> Result<()> {
        for index in [self.y_dot, self.y_ddot] {
            if index >= num_classes {
                return Err(Error::Index {
                    index,
                    len: num_classes,
                });
            }
        }
        match self.kind {
            SampleKind::BonaFide | SampleKind::SelfMorph if self.y_dot != self.y_ddot => Err(
                Error::Protocol(format!(
                    "{:?} sample carries distinct labels {} and {}",
                    self.kind, self.y_dot, self.y_ddot
                )),
            ),
            SampleKind::Morph if self.y_dot == self.y_ddot => Err(Error::Protocol(format!(
                "morph sample carries identical labels {}",
                self.y_dot
            ))),
            _ => Ok(()),
        }
    }
}

/// Cosines between one embedding and every row of a class head.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineLogits(Vec<f64>);

impl CosineLogits {
    /// Accepts values within `COSINE_TOLERANCE` of `[-1, 1]`, clamping them.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let mut values = values;
        for v in &mut values {
            if !v.is_finite() || v.abs() > 1.0 + super::COSINE_TOLERANCE {
                return Err(Error::NumericInput(format!("cosine {v} outside [-1, 1]")));
            }
            *v = v.clamp(-1.0, 1.0);
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margin_config_ranges() {
        assert!(MarginConfig::new(64.0, 0.5, -0.1).is_ok());
        assert!(MarginConfig::new(0.0, 0.5, 0.0).is_err());
        assert!(MarginConfig::new(64.0, -0.1, 0.0).is_err());
        assert!(MarginConfig::new(64.0, 1.6, 0.0).is_err());
        assert!(MarginConfig::new(64.0, 0.5, 1.1).is_err());
        assert!(MarginConfig::new(64.0, 0.0, -1.5).is_ok());
        assert!(MarginConfig::new(64.0, 0.0, -1.6).is_err());
        let cfg = MarginConfig::new(64.0, 0.5, -0.1).unwrap();
        assert_eq!(cfg.margin_for(SampleKind::Morph), 0.5 + -0.1);
        assert_eq!(cfg.margin_for(SampleKind::SelfMorph), 0.5);
    }

    #[test]
    fn label_pair_rules() {
        assert!(LabelPair::bona_fide(2).validate(3).is_ok());
        assert!(LabelPair::morph(0, 1).validate(3).is_ok());
        assert!(matches!(LabelPair::morph(1, 1).validate(3), Err(Error::Protocol(_))));
        let bad = LabelPair {
            y_dot: 0,
            y_ddot: 1,
            kind: SampleKind::SelfMorph,
        };
        assert!(matches!(bad.validate(3), Err(Error::Protocol(_))));
        assert!(matches!(
            LabelPair::bona_fide(3).validate(3),
            Err(Error::Index { index: 3, len: 3 })
        ));
    }

    #[test]
    fn cosine_logits_clamp_band() {
        let c = CosineLogits::new(vec![1.0 + 1e-12, -1.0 - 5e-10, 0.3]).unwrap();
        assert_eq!(c.values(), &[1.0, -1.0, 0.3]);
        assert!(CosineLogits::new(vec![1.01]).is_err());
        assert!(CosineLogits::new(vec![f64::NAN]).is_err());
    }
}
