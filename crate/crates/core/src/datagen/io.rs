//! Dataset files are JSON lines, one sample per line; protocol files are a
//! single JSON array of pair records. Floats are written in shortest
//! round-trip form, so both formats reload bit-exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{IdentityUniverse, MorphPair, MorphPairProtocol, Sample, Subset};
use crate::error::{Error, Result};
use crate::loss::{LabelPair, SampleKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub kind: SampleKind,
    pub y_dot: usize,
    pub y_ddot: usize,
    pub source_ids: Vec<usize>,
    pub input: Vec<f64>,
}

impl From<&Sample> for SampleRecord {
    fn from(s: &Sample) -> Self {
        Self {
            kind: s.labels.kind,
            y_dot: s.labels.y_dot,
            y_ddot: s.labels.y_ddot,
            source_ids: s.source_ids.clone(),
            input: s.input.clone(),
        }
    }
}

impl From<SampleRecord> for Sample {
    fn from(r: SampleRecord) -> Self {
        Sample {
            input: r.input,
            labels: LabelPair {
                y_dot: r.y_dot,
                y_ddot: r.y_ddot,
                kind: r.kind,
            },
            source_ids: r.source_ids,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolRecord {
    pub identity_a: usize,
    pub identity_b: usize,
    pub subset_a: Subset,
    pub subset_b: Subset,
    pub sample_a: usize,
    pub sample_b: usize,
}

impl ProtocolRecord {
    pub fn new(pair: &MorphPair, universe: &IdentityUniverse) -> Self {
        Self {
            identity_a: pair.identity_a,
            identity_b: pair.identity_b,
            subset_a: universe.subset_of(pair.identity_a),
            subset_b: universe.subset_of(pair.identity_b),
            sample_a: pair.sample_a,
            sample_b: pair.sample_b,
        }
    }

    pub fn pair(&self) -> MorphPair {
        MorphPair {
            identity_a: self.identity_a,
            identity_b: self.identity_b,
            sample_a: self.sample_a,
            sample_b: self.sample_b,
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_dataset(path: &Path, samples: &[Sample]) -> Result<()> {
    let mut w = create(path)?;
    for s in samples {
        let line = serde_json::to_string(&SampleRecord::from(s)).map_err(|e| Error::parse(path, e))?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<Vec<Sample>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SampleRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, format!("line {}: {e}", n + 1)))?;
        out.push(record.into());
    }
    Ok(out)
}

pub fn write_protocol(path: &Path, protocol: &MorphPairProtocol, universe: &IdentityUniverse) -> Result<()> {
    let records: Vec<ProtocolRecord> = protocol.pairs.iter().map(|p| ProtocolRecord::new(p, universe)).collect();
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, &records).map_err(|e| Error::parse(path, e))?;
    writeln!(w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Loads a protocol file. Subset annotations must be cross-subset and
/// oriented subset 1 -> subset 2.
pub fn read_protocol(path: &Path) -> Result<MorphPairProtocol> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let records: Vec<ProtocolRecord> =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::parse(path, e))?;
    for (i, r) in records.iter().enumerate() {
        if r.subset_a != Subset::First || r.subset_b != Subset::Second {
            return Err(Error::Protocol(format!(
                "{}: record {i} pairs subsets {:?} -> {:?}",
                path.display(),
                r.subset_a,
                r.subset_b
            )));
        }
    }
    Ok(MorphPairProtocol {
        pairs: records.iter().map(ProtocolRecord::pair).collect(),
        seed: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{build_training_set, pair_protocol, synth_identities, MixRatios};

    #[test]
    fn dataset_and_protocol_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (u, bf) = synth_identities(4, 6, 5, 0.3, 21).unwrap();
        let proto = pair_protocol(&u, &bf, 12, 22).unwrap();
        let set = build_training_set(&u, &bf, &proto, MixRatios { bona_fide: 2.0, morph: 1.0, selfmorph: 1.0 }, 0.5, 23)
            .unwrap();

        let data_path = dir.path().join("train.jsonl");
        write_dataset(&data_path, &set).unwrap();
        let back = read_dataset(&data_path).unwrap();
        assert_eq!(back.len(), set.len());
        for (a, b) in back.iter().zip(&set) {
            assert_eq!(a.labels, b.labels);
            assert_eq!(a.source_ids, b.source_ids);
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a.input), bits(&b.input));
        }

        let proto_path = dir.path().join("protocol.json");
        write_protocol(&proto_path, &proto, &u).unwrap();
        let loaded = read_protocol(&proto_path).unwrap();
        assert_eq!(loaded.pairs, proto.pairs);
        assert_eq!(loaded.seed, None);
    }

    #[test]
    fn rejects_within_subset_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(
            &path,
            r#"[{"identity_a":0,"identity_b":1,"subset_a":1,"subset_b":1,"sample_a":0,"sample_b":3}]"#,
        )
        .unwrap();
        assert!(matches!(read_protocol(&path), Err(Error::Protocol(_))));
        std::fs::write(&path, "{").unwrap();
        assert!(matches!(read_protocol(&path), Err(Error::Parse { .. })));
    }
}
