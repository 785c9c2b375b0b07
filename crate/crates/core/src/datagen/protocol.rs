use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{normalize_input, IdentityUniverse, Sample, Subset};
use crate::error::{Error, Result};
use crate::loss::{LabelPair, SampleKind};
use crate::rng::SeededRng;

/// One cross-subset morph pairing. `a` is always the subset-1 side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MorphPair {
    pub identity_a: usize,
    pub identity_b: usize,
    pub sample_a: usize,
    pub sample_b: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MorphPairProtocol {
    pub pairs: Vec<MorphPair>,
    /// Seed the pairs were drawn with; `None` when loaded from a file.
    pub seed: Option<u64>,
}

impl MorphPairProtocol {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Verifies every pair is cross-subset, oriented subset 1 -> subset 2,
    /// and unique.
    pub fn validate(&self, universe: &IdentityUniverse) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.pairs.len());
        for (i, p) in self.pairs.iter().enumerate() {
            for id in [p.identity_a, p.identity_b] {
                if id >= universe.num_classes() {
                    return Err(Error::Index {
                        index: id,
                        len: universe.num_classes(),
                    });
                }
            }
            if universe.subset_of(p.identity_a) != Subset::First
                || universe.subset_of(p.identity_b) != Subset::Second
            {
                return Err(Error::Protocol(format!(
                    "pair {i} ({}, {}) is not a subset-1 x subset-2 pairing",
                    p.identity_a, p.identity_b
                )));
            }
            if !seen.insert((p.sample_a, p.sample_b)) {
                return Err(Error::Protocol(format!("pair {i} repeats samples ({}, {})", p.sample_a, p.sample_b)));
            }
        }
        Ok(())
    }
}

/// Draws `num_morphs` distinct cross-subset sample pairs.
///
/// Pairs are sampled uniformly with duplicate rejection; when more than half
/// of all cross pairs are requested, the full cross product is shuffled and
/// truncated instead.
pub fn pair_protocol(
    universe: &IdentityUniverse,
    bona_fides: &[Sample],
    num_morphs: usize,
    seed: u64,
) -> Result<MorphPairProtocol> {
    let mut first = Vec::new();
    let mut second = Vec::new();
    for (i, s) in bona_fides.iter().enumerate() {
        if s.kind() != SampleKind::BonaFide {
            continue;
        }
        let Some(id) = s.identity() else { continue };
        if id >= universe.num_classes() {
            return Err(Error::Index {
                index: id,
                len: universe.num_classes(),
            });
        }
        match universe.subset_of(id) {
            Subset::First => first.push((id, i)),
            Subset::Second => second.push((id, i)),
        }
    }
    let capacity = first.len() * second.len();
    if num_morphs > capacity {
        return Err(Error::Capacity {
            what: "cross-subset sample pairs",
            requested: num_morphs,
            available: capacity,
        });
    }
    let make = |(ia, sa): (usize, usize), (ib, sb): (usize, usize)| MorphPair {
        identity_a: ia,
        identity_b: ib,
        sample_a: sa,
        sample_b: sb,
    };
    let mut rng = SeededRng::new(seed);
    let pairs = if num_morphs * 2 > capacity {
        let mut all: Vec<MorphPair> = first
            .iter()
            .flat_map(|&a| second.iter().map(move |&b| make(a, b)))
            .collect();
        rng.shuffle(&mut all);
        all.truncate(num_morphs);
        all
    } else {
        let mut seen = HashSet::with_capacity(num_morphs);
        let mut pairs = Vec::with_capacity(num_morphs);
        while pairs.len() < num_morphs {
            let a = first[rng.below(first.len())];
            let b = second[rng.below(second.len())];
            if seen.insert((a.1, b.1)) {
                pairs.push(make(a, b));
            }
        }
        pairs
    };
    Ok(MorphPairProtocol {
        pairs,
        seed: Some(seed),
    })
}

fn single_identity(s: &Sample, role: &str) -> Result<usize> {
    if s.kind() != SampleKind::BonaFide {
        return Err(Error::Protocol(format!("{role} parent must be a bona fide sample")));
    }
    s.identity()
        .ok_or_else(|| Error::Protocol(format!("{role} parent must have exactly one source identity")))
}

/// Convex blend `normalize(alpha·a + (1-alpha)·b)` of two parents from
/// different subsets. Labels follow the parents' subsets, not argument order.
pub fn make_morph(universe: &IdentityUniverse, a: &Sample, b: &Sample, alpha: f64) -> Result<Sample> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("blend coefficient must lie in (0, 1), got {alpha}")));
    }
    let id_a = single_identity(a, "first")?;
    let id_b = single_identity(b, "second")?;
    for id in [id_a, id_b] {
        if id >= universe.num_classes() {
            return Err(Error::Index {
                index: id,
                len: universe.num_classes(),
            });
        }
    }
    let (first, second) = match (universe.subset_of(id_a), universe.subset_of(id_b)) {
        (Subset::First, Subset::Second) => (id_a, id_b),
        (Subset::Second, Subset::First) => (id_b, id_a),
        _ => {
            return Err(Error::Protocol(format!(
                "identities {id_a} and {id_b} share a subset; their morph would be ambiguous"
            )))
        }
    };
    if a.input.len() != b.input.len() {
        return Err(Error::Config("parent input dimensions differ".into()));
    }
    let blend: Vec<f64> = a
        .input
        .iter()
        .zip(&b.input)
        .map(|(x, y)| alpha * x + (1.0 - alpha) * y)
        .collect();
    Ok(Sample {
        input: normalize_input(&blend)?,
        labels: LabelPair::morph(first, second),
        source_ids: vec![first, second],
    })
}

/// Equal blend of two samples of the same identity, labelled as that identity.
pub fn make_selfmorph(a: &Sample, b: &Sample) -> Result<Sample> {
    let id_a = single_identity(a, "first")?;
    let id_b = single_identity(b, "second")?;
    if id_a != id_b {
        return Err(Error::Protocol(format!(
            "selfmorph parents belong to different identities ({id_a}, {id_b})"
        )));
    }
    if a.input.len() != b.input.len() {
        return Err(Error::Config("parent input dimensions differ".into()));
    }
    let blend: Vec<f64> = a.input.iter().zip(&b.input).map(|(x, y)| 0.5 * x + 0.5 * y).collect();
    Ok(Sample {
        input: normalize_input(&blend)?,
        labels: LabelPair::self_morph(id_a),
        source_ids: vec![id_a],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::synth_identities;
    use crate::linalg::dot;

    fn fixed_universe() -> IdentityUniverse {
        // A, B in subset 1; C, D in subset 2.
        IdentityUniverse {
            prototypes: vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![0.6, 0.8, 0.0],
            ],
            subsets: vec![Subset::First, Subset::First, Subset::Second, Subset::Second],
            spread: 0.1,
            seed: 0,
        }
    }

    fn prototype_samples(u: &IdentityUniverse, per_class: usize) -> Vec<Sample> {
        (0..u.num_classes())
            .flat_map(|c| (0..per_class).map(move |_| c))
            .map(|c| Sample::bona_fide(u.prototypes[c].clone(), c))
            .collect()
    }

    #[test]
    fn only_cross_subset_families() {
        let u = fixed_universe();
        let bf = prototype_samples(&u, 5);
        let proto = pair_protocol(&u, &bf, 60, 3).unwrap();
        proto.validate(&u).unwrap();
        let families: HashSet<(usize, usize)> = proto.pairs.iter().map(|p| (p.identity_a, p.identity_b)).collect();
        let allowed: HashSet<(usize, usize)> = [(0, 2), (0, 3), (1, 2), (1, 3)].into_iter().collect();
        assert!(families.is_subset(&allowed));
        assert_eq!(families, allowed);
    }

    #[test]
    fn exhaustive_enumeration() {
        let u = fixed_universe();
        let bf = prototype_samples(&u, 2);
        // Independent enumeration of every (subset-1 sample, subset-2 sample).
        let mut expected = HashSet::new();
        for (i, si) in bf.iter().enumerate() {
            for (j, sj) in bf.iter().enumerate() {
                let (a, b) = (si.identity().unwrap(), sj.identity().unwrap());
                if u.subset_of(a) == Subset::First && u.subset_of(b) == Subset::Second {
                    expected.insert((i, j));
                }
            }
        }
        assert_eq!(expected.len(), 16);
        let proto = pair_protocol(&u, &bf, 16, 1).unwrap();
        let got: HashSet<(usize, usize)> = proto.pairs.iter().map(|p| (p.sample_a, p.sample_b)).collect();
        assert_eq!(got, expected);
        assert!(matches!(pair_protocol(&u, &bf, 17, 1), Err(Error::Capacity { available: 16, .. })));
        assert!(pair_protocol(&u, &bf, 0, 1).unwrap().is_empty());
    }

    #[test]
    fn morph_orientation_follows_subsets() {
        let u = fixed_universe();
        let a = Sample::bona_fide(u.prototypes[3].clone(), 3);
        let b = Sample::bona_fide(u.prototypes[0].clone(), 0);
        let ab = make_morph(&u, &a, &b, 0.5).unwrap();
        let ba = make_morph(&u, &b, &a, 0.5).unwrap();
        assert_eq!(ab.labels, LabelPair::morph(0, 3));
        assert_eq!(ab.labels, ba.labels);
        assert_eq!(ab.source_ids, vec![0, 3]);
        let same = Sample::bona_fide(u.prototypes[1].clone(), 1);
        assert!(matches!(make_morph(&u, &b, &same, 0.5), Err(Error::Protocol(_))));
        assert!(make_morph(&u, &a, &b, 1.0).is_err());
    }

    #[test]
    fn morph_of_identical_inputs() {
        let u = fixed_universe();
        let v = vec![0.6, 0.0, 0.8];
        let m = make_morph(&u, &Sample::bona_fide(v.clone(), 0), &Sample::bona_fide(v.clone(), 2), 0.5).unwrap();
        for (x, y) in m.input.iter().zip(&v) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn midpoint_geometry() {
        let (u, _) = synth_identities(6, 2, 10, 0.1, 12).unwrap();
        let a = u.members(Subset::First)[0];
        let b = u.members(Subset::Second)[0];
        let (pa, pb) = (&u.prototypes[a], &u.prototypes[b]);
        let m = make_morph(&u, &Sample::bona_fide(pa.clone(), a), &Sample::bona_fide(pb.clone(), b), 0.5).unwrap();
        let expected = ((1.0 + dot(pa, pb)) / 2.0).sqrt();
        assert!((dot(&m.input, pa) - expected).abs() < 1e-12);
        assert!((dot(&m.input, pb) - expected).abs() < 1e-12);
    }

    #[test]
    fn selfmorph_rules() {
        let x = Sample::bona_fide(vec![0.0, 1.0], 1);
        let s = make_selfmorph(&x, &x).unwrap();
        assert_eq!(s.input, x.input);
        assert_eq!(s.labels, LabelPair::self_morph(1));
        assert_eq!(s.labels.y_dot, s.labels.y_ddot);
        let y = Sample::bona_fide(vec![1.0, 0.0], 2);
        assert!(matches!(make_selfmorph(&x, &y), Err(Error::Protocol(_))));
    }

    #[test]
    fn selfmorph_denoises() {
        let (u, _) = synth_identities(2, 2, 32, 0.1, 0).unwrap();
        let mut rng = SeededRng::new(77);
        let proto = &u.prototypes[0];
        let (mut parents, mut children) = (0.0, 0.0);
        let draws = 10_000;
        for _ in 0..draws {
            let noisy = |rng: &mut SeededRng| {
                let v: Vec<f64> = proto.iter().map(|p| p + 0.1 * rng.gaussian()).collect();
                Sample::bona_fide(normalize_input(&v).unwrap(), 0)
            };
            let (a, b) = (noisy(&mut rng), noisy(&mut rng));
            let m = make_selfmorph(&a, &b).unwrap();
            parents += 0.5 * (dot(&a.input, proto) + dot(&b.input, proto));
            children += dot(&m.input, proto);
        }
        assert!(children / draws as f64 > parents / draws as f64);
    }
}
