//! Morph feature-distribution analysis.
//!
//! Each (bona fide A, bona fide B, morph) feature triplet is projected to
//! 2D by averaging even- and odd-indexed coordinates, then moved by the
//! rigid motion that centres the A-B midpoint at the origin and points A->B
//! along (1, 1). The aligned morph points of all triplets form a cloud
//! whose 0.9-level confidence ellipse size `S = (W + H) / 2` measures how
//! tightly morphs concentrate relative to their sources.

mod ellipse;
mod export;

pub use ellipse::{chi2_quantile_2dof, confidence_ellipse, Ellipse};
pub use export::{render_svg, write_cloud_csv, write_ellipse_csv};

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::encoder::DualHeadModel;
use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// `(mean of even-indexed entries, mean of odd-indexed entries)`.
pub fn project_2d(feature: &[f64]) -> Result<Point> {
    let d = feature.len();
    if d < 2 || d % 2 != 0 {
        return Err(Error::Config(format!("feature dimension must be even and at least 2, got {d}")));
    }
    let (mut even, mut odd) = (0.0, 0.0);
    for pair in feature.chunks_exact(2) {
        even += pair[0];
        odd += pair[1];
    }
    let half = (d / 2) as f64;
    Ok([even / half, odd / half])
}

/// Rotation by `angle` about the origin followed by `translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub angle: f64,
    pub translation: Point,
}

impl RigidTransform {
    pub fn apply(&self, p: Point) -> Point {
        let (s, c) = self.angle.sin_cos();
        [
            c * p[0] - s * p[1] + self.translation[0],
            s * p[0] + c * p[1] + self.translation[1],
        ]
    }
}

/// Rigid motion taking the midpoint of `p1, p2` to the origin and the
/// direction `p2 - p1` onto `(1, 1)/√2`. Without scaling, the anchors land
/// on `∓(|p2 - p1|/2)(1, 1)/√2`, which is `(∓0.5, ∓0.5)` only when
/// `|p2 - p1| = √2`.
pub fn fit_rigid(p1: Point, p2: Point) -> Result<RigidTransform> {
    let (dx, dy) = (p2[0] - p1[0], p2[1] - p1[1]);
    if !(dx.hypot(dy) > 1e-12) {
        return Err(Error::DegenerateAnchor);
    }
    let mut angle = FRAC_PI_4 - dy.atan2(dx);
    if angle <= -std::f64::consts::PI {
        angle += std::f64::consts::TAU;
    }
    let mid = [(p1[0] + p2[0]) / 2.0, (p1[1] + p2[1]) / 2.0];
    let rotated = RigidTransform {
        angle,
        translation: [0.0, 0.0],
    }
    .apply(mid);
    Ok(RigidTransform {
        angle,
        translation: [-rotated[0], -rotated[1]],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    pub bona_a: Vec<f64>,
    pub bona_b: Vec<f64>,
    pub morph: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignMode {
    /// Rotation and translation only.
    #[default]
    Rigid,
    /// Additionally scales about the origin so the anchors land exactly on
    /// (-0.5, -0.5) and (0.5, 0.5).
    Similarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignedTriplet {
    pub bona_a: Point,
    pub bona_b: Point,
    pub morph: Point,
}

pub fn align_triplet(t: &Triplet) -> Result<AlignedTriplet> {
    align_triplet_with(t, AlignMode::Rigid)
}

pub fn align_triplet_with(t: &Triplet, mode: AlignMode) -> Result<AlignedTriplet> {
    let d = t.bona_a.len();
    if t.bona_b.len() != d || t.morph.len() != d {
        return Err(Error::Config("triplet members differ in dimension".into()));
    }
    let (a, b, m) = (project_2d(&t.bona_a)?, project_2d(&t.bona_b)?, project_2d(&t.morph)?);
    let tf = fit_rigid(a, b)?;
    let scale = match mode {
        AlignMode::Rigid => 1.0,
        AlignMode::Similarity => std::f64::consts::SQRT_2 / (b[0] - a[0]).hypot(b[1] - a[1]),
    };
    let map = |p: Point| {
        let q = tf.apply(p);
        [scale * q[0], scale * q[1]]
    };
    Ok(AlignedTriplet {
        bona_a: map(a),
        bona_b: map(b),
        morph: map(m),
    })
}

/// Aligned triplets and the confidence ellipse over their morph points.
#[derive(Debug, Clone, PartialEq)]
pub struct MorphSpread {
    pub aligned: Vec<AlignedTriplet>,
    pub ellipse: Ellipse,
}

impl MorphSpread {
    pub fn size(&self) -> f64 {
        self.ellipse.size
    }
}

/// Fits the ellipse at `level` over the aligned morph points of feature triplets.
pub fn morph_spread_from_features(triplets: &[Triplet], mode: AlignMode, level: f64) -> Result<MorphSpread> {
    if triplets.len() < 3 {
        return Err(Error::Config(format!("need at least 3 triplets, got {}", triplets.len())));
    }
    let aligned = triplets
        .iter()
        .enumerate()
        .map(|(i, t)| align_triplet_with(t, mode).map_err(|e| e.context(format!("triplet {i}"))))
        .collect::<Result<Vec<_>>>()?;
    let cloud: Vec<Point> = aligned.iter().map(|a| a.morph).collect();
    let ellipse = confidence_ellipse(&cloud, level)?;
    Ok(MorphSpread { aligned, ellipse })
}

/// Embeds every member of the input-space triplets with `model`, then
/// measures the spread of the aligned morph embeddings at the 0.9 level.
pub fn morph_spread(triplets: &[Triplet], model: &DualHeadModel) -> Result<MorphSpread> {
    morph_spread_with(triplets, model, AlignMode::Rigid, 0.9)
}

pub fn morph_spread_with(
    triplets: &[Triplet],
    model: &DualHeadModel,
    mode: AlignMode,
    level: f64,
) -> Result<MorphSpread> {
    let features = triplets
        .iter()
        .map(|t| {
            Ok(Triplet {
                bona_a: model.embed(&t.bona_a)?,
                bona_b: model.embed(&t.bona_b)?,
                morph: model.embed(&t.morph)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    morph_spread_from_features(&features, mode, level)
}
