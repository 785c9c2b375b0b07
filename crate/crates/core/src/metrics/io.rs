//! CSV / JSON exchange formats:
//!
//! * curves: `threshold,value`
//! * operating points: `metric,target,achieved,threshold,value`
//! * verification scores: `label,score` with label `genuine` or `impostor`
//! * morph trials: JSON array of `{morph_id, subject_scores}`

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MorphTrial, ThresholdCurve, VerificationSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
/// One reported number. Fields that do not apply to a metric (the target
/// of a minimum, the threshold of a spread statistic) are left empty.
pub struct OperatingPointRow {
    pub metric: String,
    pub target: Option<f64>,
    pub achieved: Option<f64>,
    pub threshold: Option<f64>,
    pub value: f64,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::parse(path, format!("{other:?}")),
        }
    } else {
        Error::parse(path, e)
    }
}

pub fn write_curve_csv(path: &Path, curve: &ThresholdCurve) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["threshold", "value"]).map_err(|e| csv_error(path, e))?;
    for (t, v) in curve.iter() {
        w.serialize((t, v)).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_operating_points_csv(path: &Path, rows: &[OperatingPointRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    if rows.is_empty() {
        w.write_record(["metric", "target", "achieved", "threshold", "value"])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct ScoreRow {
    label: String,
    score: f64,
}

pub fn write_scores_csv(path: &Path, set: &VerificationSet) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["label", "score"]).map_err(|e| csv_error(path, e))?;
    for (label, scores) in [("genuine", &set.genuine), ("impostor", &set.impostor)] {
        for s in scores {
            w.serialize((label, s)).map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_scores_csv(path: &Path) -> Result<VerificationSet> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut set = VerificationSet::default();
    for row in r.deserialize::<ScoreRow>() {
        let row = row.map_err(|e| csv_error(path, e))?;
        match row.label.as_str() {
            "genuine" => set.genuine.push(row.score),
            "impostor" => set.impostor.push(row.score),
            other => return Err(Error::parse(path, format!("unknown score label {other:?}"))),
        }
    }
    Ok(set)
}

pub fn write_trials_json(path: &Path, trials: &[MorphTrial]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, trials).map_err(|e| Error::parse(path, e))?;
    writeln!(w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_trials_json(path: &Path) -> Result<Vec<MorphTrial>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::parse(path, e))
}
