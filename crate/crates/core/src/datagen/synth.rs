use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{make_morph, make_selfmorph, normalize_input, MorphPairProtocol, Sample, Subset};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Ground truth of a synthetic identity population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityUniverse {
    pub prototypes: Vec<Vec<f64>>,
    pub subsets: Vec<Subset>,
    pub spread: f64,
    pub seed: u64,
}

impl IdentityUniverse {
    pub fn num_classes(&self) -> usize {
        self.prototypes.len()
    }

    pub fn input_dim(&self) -> usize {
        self.prototypes.first().map_or(0, Vec::len)
    }

    pub fn subset_of(&self, identity: usize) -> Subset {
        self.subsets[identity]
    }

    pub fn members(&self, subset: Subset) -> Vec<usize> {
        (0..self.subsets.len()).filter(|&i| self.subsets[i] == subset).collect()
    }
}

/// Seeded balanced partition of `0..num_classes` into two subsets whose
/// sizes differ by at most one.
pub fn split_identities(num_classes: usize, seed: u64) -> Result<Vec<Subset>> {
    if num_classes < 2 {
        return Err(Error::Config(format!("need at least 2 identities, got {num_classes}")));
    }
    let mut order: Vec<usize> = (0..num_classes).collect();
    SeededRng::new(seed).shuffle(&mut order);
    let mut subsets = vec![Subset::Second; num_classes];
    for &id in &order[..num_classes.div_ceil(2)] {
        subsets[id] = Subset::First;
    }
    Ok(subsets)
}

/// Draws `num_classes` unit prototypes and `samples_per_class` noisy
/// bona fide samples around each, ordered class by class.
pub fn synth_identities(
    num_classes: usize,
    samples_per_class: usize,
    input_dim: usize,
    spread: f64,
    seed: u64,
) -> Result<(IdentityUniverse, Vec<Sample>)> {
    if num_classes < 2 || num_classes % 2 != 0 {
        return Err(Error::Config(format!(
            "identity count must be even and at least 2, got {num_classes}"
        )));
    }
    if samples_per_class < 2 {
        return Err(Error::Config(format!(
            "need at least 2 samples per class, got {samples_per_class}"
        )));
    }
    if input_dim < 2 {
        return Err(Error::Config(format!("input dimension must be at least 2, got {input_dim}")));
    }
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(Error::Config(format!("spread must be positive, got {spread}")));
    }
    let root = SeededRng::new(seed);
    let mut proto_rng = root.split(0);
    let mut noise_rng = root.split(2);
    let subsets = split_identities(num_classes, root.split(1).seed())?;

    let mut prototypes = Vec::with_capacity(num_classes);
    while prototypes.len() < num_classes {
        let g: Vec<f64> = (0..input_dim).map(|_| proto_rng.gaussian()).collect();
        if let Ok(p) = normalize_input(&g) {
            prototypes.push(p);
        }
    }

    let mut samples = Vec::with_capacity(num_classes * samples_per_class);
    for (class, proto) in prototypes.iter().enumerate() {
        for _ in 0..samples_per_class {
            let noisy: Vec<f64> = proto.iter().map(|p| p + spread * noise_rng.gaussian()).collect();
            samples.push(Sample::bona_fide(normalize_input(&noisy)?, class));
        }
    }
    let universe = IdentityUniverse {
        prototypes,
        subsets,
        spread,
        seed,
    };
    Ok((universe, samples))
}

/// Relative proportions of bona fide, morph and selfmorph samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixRatios {
    pub bona_fide: f64,
    pub morph: f64,
    pub selfmorph: f64,
}

impl Default for MixRatios {
    fn default() -> Self {
        Self {
            bona_fide: 2.0,
            morph: 1.0,
            selfmorph: 1.0,
        }
    }
}

impl MixRatios {
    pub fn bona_fide_only() -> Self {
        Self {
            bona_fide: 1.0,
            morph: 0.0,
            selfmorph: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.bona_fide, self.morph, self.selfmorph];
        if parts.iter().any(|r| !(r.is_finite() && *r >= 0.0)) || parts.iter().all(|r| *r == 0.0) {
            return Err(Error::Config(format!(
                "mix ratios must be nonnegative and not all zero, got {parts:?}"
            )));
        }
        Ok(())
    }

    /// Pool sizes for `bona_fides` available bona fides and `morphs`
    /// available protocol pairs. The first nonzero ratio among
    /// (bona fide, morph, selfmorph) anchors the scale.
    pub fn counts(&self, bona_fides: usize, morphs: usize) -> [usize; 3] {
        let unit = if self.bona_fide > 0.0 {
            bona_fides as f64 / self.bona_fide
        } else if self.morph > 0.0 {
            morphs as f64 / self.morph
        } else {
            bona_fides as f64 / self.selfmorph
        };
        [self.bona_fide, self.morph, self.selfmorph].map(|r| (unit * r).round() as usize)
    }
}

/// Combines bona fides, protocol morphs (taken in protocol order) and
/// seeded selfmorphs, interleaved so every prefix tracks the requested
/// proportions.
pub fn build_training_set(
    universe: &IdentityUniverse,
    bona_fides: &[Sample],
    protocol: &MorphPairProtocol,
    ratios: MixRatios,
    alpha: f64,
    seed: u64,
) -> Result<Vec<Sample>> {
    ratios.validate()?;
    let [n_bf, n_morph, n_self] = ratios.counts(bona_fides.len(), protocol.pairs.len());
    if n_bf > bona_fides.len() {
        return Err(Error::Capacity {
            what: "bona fide samples",
            requested: n_bf,
            available: bona_fides.len(),
        });
    }
    if n_morph > protocol.pairs.len() {
        return Err(Error::Capacity {
            what: "protocol morph pairs",
            requested: n_morph,
            available: protocol.pairs.len(),
        });
    }

    let bf_pool: Vec<Sample> = bona_fides[..n_bf].to_vec();
    let morph_pool = protocol.pairs[..n_morph]
        .iter()
        .map(|p| make_morph(universe, &bona_fides[p.sample_a], &bona_fides[p.sample_b], alpha))
        .collect::<Result<Vec<_>>>()?;
    let self_pool = selfmorphs(bona_fides, n_self, seed)?;

    let pools = [bf_pool, morph_pool, self_pool];
    let mut keyed: Vec<(f64, usize, Sample)> = Vec::with_capacity(n_bf + n_morph + n_self);
    for (k, pool) in pools.into_iter().enumerate() {
        let n = pool.len() as f64;
        for (i, s) in pool.into_iter().enumerate() {
            keyed.push(((i as f64 + 0.5) / n, k, s));
        }
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(keyed.into_iter().map(|(_, _, s)| s).collect())
}

fn selfmorphs(bona_fides: &[Sample], count: usize, seed: u64) -> Result<Vec<Sample>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let mut by_identity: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, s) in bona_fides.iter().enumerate() {
        if let Some(id) = s.identity() {
            by_identity.entry(id).or_default().push(i);
        }
    }
    let capacity: usize = by_identity.values().map(|v| v.len() * (v.len() - 1) / 2).sum();
    if count > capacity {
        return Err(Error::Capacity {
            what: "selfmorph pairs",
            requested: count,
            available: capacity,
        });
    }
    let eligible: Vec<usize> = (0..bona_fides.len())
        .filter(|&i| bona_fides[i].identity().is_some_and(|id| by_identity[&id].len() >= 2))
        .collect();
    let mut rng = SeededRng::new(seed);
    let mut used = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = eligible[rng.below(eligible.len())];
        let mates = &by_identity[&bona_fides[a].identity().unwrap_or_default()];
        let b = mates[rng.below(mates.len())];
        if a == b || !used.insert((a.min(b), a.max(b))) {
            continue;
        }
        out.push(make_selfmorph(&bona_fides[a], &bona_fides[b])?);
    }
    Ok(out)
}
