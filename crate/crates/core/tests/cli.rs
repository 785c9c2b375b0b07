use std::path::Path;
use std::process::{Command, Output};

use morphguard::cli::commands::Manifest;
use morphguard::cli::{evaluate, prepare_data, ExperimentConfig};
use morphguard::datagen::{read_dataset, IdentityUniverse, Subset};
use morphguard::encoder::load_checkpoint;
use morphguard::loss::SampleKind;
use morphguard::metrics::{read_scores_csv, read_trials_json};

const CONFIG: &str = r#"{
  "seed": 11,
  "data": {"num_classes": 8, "samples_per_class": 10, "input_dim": 12},
  "model": {"hidden_dims": [16], "embedding_dim": 6},
  "train": {"epochs": 2, "lr_start": 0.001, "lr_end": 0.00001, "batch_size": 16,
            "margin": {"scale": 64.0, "bona_fide": 0.5, "morph_offset": 0.0}},
  "adapt": {
    "stage1": {"epochs": 2, "lr_start": 0.001, "lr_end": 0.00001, "batch_size": 16,
               "margin": {"scale": 64.0, "bona_fide": 0.5, "morph_offset": 0.0}},
    "stage2": {"epochs": 1, "lr_start": 0.0001, "lr_end": 0.00001, "batch_size": 16,
               "margin": {"scale": 64.0, "bona_fide": 0.5, "morph_offset": -0.1}}
  },
  "sweep": {"margin_grid": [0.05, 0.0, -0.1]},
  "eval": {"genuine_pairs": 150, "impostor_pairs": 150, "eval_morphs": 30}
}"#;

fn morphguard(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_morphguard"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn ok(cwd: &Path, args: &[&str]) -> Vec<u8> {
    let out = morphguard(cwd, args);
    assert!(
        out.status.success(),
        "morphguard {:?}: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), CONFIG).unwrap();
    dir
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

fn config() -> ExperimentConfig {
    serde_json::from_str(CONFIG).unwrap()
}

#[test]
fn default_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(dir.path(), &["print-default-config"]);
    let parsed: ExperimentConfig = serde_json::from_slice(&text).unwrap();
    assert_eq!(parsed, ExperimentConfig::default());
    assert_eq!(parsed.to_json().as_bytes(), text.as_slice());
}

#[test]
fn manifest_records_the_effective_config() {
    let dir = workspace();
    ok(dir.path(), &["gen-data", "--config", "cfg.json", "--seed", "5", "--out", "data"]);
    let manifest = Manifest::read(&dir.path().join("data/manifest.json")).unwrap();
    let mut expected = config();
    expected.seed = 5;
    assert_eq!(manifest.config, expected);
    assert_eq!(manifest.seed, 5);
    assert!(manifest.checkpoint.is_none() && manifest.data.is_none());
}

#[test]
fn generated_data_follows_the_mixing_ratios() {
    let dir = workspace();
    ok(dir.path(), &["gen-data", "--config", "cfg.json", "--out", "data"]);
    let train = read_dataset(&dir.path().join("data/train.jsonl")).unwrap();
    let count = |k: SampleKind| train.iter().filter(|s| s.labels.kind == k).count();
    let bona_fide = count(SampleKind::BonaFide);
    // 2:1:1 by default
    assert_eq!(count(SampleKind::Morph), (bona_fide as f64 / 2.0).round() as usize);
    assert_eq!(count(SampleKind::SelfMorph), count(SampleKind::Morph));
    // every morph takes its first label from subset 1 and its second from subset 2
    let text = std::fs::read_to_string(dir.path().join("data/universe.json")).unwrap();
    let universe: IdentityUniverse = serde_json::from_str(&text).unwrap();
    for s in train.iter().filter(|s| s.labels.kind == SampleKind::Morph) {
        assert_eq!(universe.subset_of(s.labels.y_dot), Subset::First, "{:?}", s.labels);
        assert_eq!(universe.subset_of(s.labels.y_ddot), Subset::Second, "{:?}", s.labels);
    }
}

#[test]
fn eval_outputs_match_the_library() {
    let dir = workspace();
    ok(dir.path(), &["gen-data", "--config", "cfg.json", "--out", "data"]);
    ok(dir.path(), &["train", "--config", "cfg.json", "--data", "data", "--out", "train"]);
    ok(
        dir.path(),
        &["eval", "--config", "cfg.json", "--data", "data", "--checkpoint", "train/model.ckpt", "--out", "eval"],
    );
    let eval = dir.path().join("eval");

    let cfg = config();
    let model = load_checkpoint(&dir.path().join("train/model.ckpt")).unwrap();
    let ev = evaluate(&model, &prepare_data(&cfg).unwrap(), &cfg).unwrap();

    assert_eq!(read_scores_csv(&eval.join("scores.csv")).unwrap(), ev.scores);
    let trials = read_trials_json(&eval.join("trials.json")).unwrap();
    assert_eq!(trials, ev.trials);
    assert_eq!(trials.len(), cfg.eval.eval_morphs);

    let fnmr = csv_rows(&eval.join("fnmr.csv"));
    assert_eq!(fnmr[0][0].parse::<f64>().unwrap(), -1.0);
    assert_eq!(fnmr[0][1].parse::<f64>().unwrap(), 0.0);
    assert_eq!(fnmr.len(), ev.fnmr_curve.len());
    for (row, (t, v)) in fnmr.iter().zip(ev.fnmr_curve.thresholds.iter().zip(&ev.fnmr_curve.values)) {
        assert_eq!(row[0].parse::<f64>().unwrap(), *t);
        assert_eq!(row[1].parse::<f64>().unwrap(), *v);
    }

    let points = csv_rows(&eval.join("operating_points.csv"));
    let rows = ev.rows();
    assert_eq!(points.len(), rows.len());
    for (got, want) in points.iter().zip(&rows) {
        assert_eq!(got[0], want.metric);
        assert_eq!(got[4].parse::<f64>().unwrap(), want.value);
    }
    let min = points.iter().find(|r| r[0] == "min_rmmr").unwrap();
    assert_eq!(min[4].parse::<f64>().unwrap(), ev.min_rmmr.value);
}

#[test]
fn sweep_report_has_one_block_per_margin() {
    let dir = workspace();
    ok(dir.path(), &["sweep-margins", "--config", "cfg.json", "--out", "sweep"]);
    let rows = csv_rows(&dir.path().join("sweep/sweep_report.csv"));
    // two FNMR targets, two FMR targets, min RMMR, ellipse size
    assert_eq!(rows.len(), 3 * 6);
    for margin in ["margin_0.05", "margin_0", "margin_-0.1"] {
        assert!(dir.path().join("sweep").join(margin).join("model.ckpt").is_file(), "{margin}");
    }

    let single = r#"{"sweep": {"margin_grid": [0.0]}}"#;
    let mut cfg: serde_json::Value = serde_json::from_str(CONFIG).unwrap();
    cfg["sweep"] = serde_json::from_str::<serde_json::Value>(single).unwrap()["sweep"].clone();
    std::fs::write(dir.path().join("single.json"), cfg.to_string()).unwrap();
    ok(dir.path(), &["sweep-margins", "--config", "single.json", "--out", "single"]);
    assert_eq!(csv_rows(&dir.path().join("single/sweep_report.csv")).len(), 6);
    let entries: Vec<_> = std::fs::read_dir(dir.path().join("single"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().is_dir())
        .collect();
    assert_eq!(entries.len(), 1);
}

#[test]
fn adapt_writes_both_stages() {
    let dir = workspace();
    ok(dir.path(), &["adapt", "--config", "cfg.json", "--out", "adapt"]);
    let root = dir.path().join("adapt");
    for stage in ["stage1", "stage2"] {
        assert!(root.join(stage).join("model.ckpt").is_file());
        assert!(root.join(stage).join("operating_points.csv").is_file());
    }
    let report = csv_rows(&root.join("adapt_report.csv"));
    assert_eq!(report.len(), 2 * 6);
    assert_eq!(report[0][0], "1");
    assert_eq!(report[6][0], "2");
}

#[test]
fn feature_analysis_outputs_agree() {
    let dir = workspace();
    ok(dir.path(), &["train", "--config", "cfg.json", "--out", "train"]);
    ok(
        dir.path(),
        &["analyze-features", "--config", "cfg.json", "--checkpoint", "train/model.ckpt", "--out", "feat"],
    );
    let feat = dir.path().join("feat");
    let svg = std::fs::read_to_string(feat.join("features.svg")).unwrap();
    let morphs = config().eval.eval_morphs;
    assert_eq!(svg.matches("<ellipse").count(), 1);
    assert_eq!(svg.matches("<circle").count(), 3 * morphs);
    assert_eq!(csv_rows(&feat.join("cloud.csv")).len(), 3 * morphs);

    let ellipse = csv_rows(&feat.join("ellipse.csv"));
    assert_eq!(ellipse.len(), 1);
    let v: Vec<f64> = ellipse[0].iter().map(|x| x.parse().unwrap()).collect();
    assert_eq!(v[2], (v[0] + v[1]) / 2.0);
    assert!(v[0] >= v[1] && v[1] > 0.0);
}

#[test]
fn exit_codes() {
    let dir = workspace();
    let code = |args: &[&str]| morphguard(dir.path(), args).status.code().unwrap();

    assert_eq!(code(&["train", "--bogus"]), 2);
    assert_eq!(code(&["eval", "--config", "cfg.json", "--out", "x"]), 2, "missing checkpoint");
    assert_eq!(code(&["train", "--config", "missing.json"]), 5);

    std::fs::write(dir.path().join("bad.json"), r#"{"seed": 1, "typo": 2}"#).unwrap();
    assert_eq!(code(&["gen-data", "--config", "bad.json"]), 2);

    std::fs::write(dir.path().join("junk.ckpt"), b"MGCKPT01\x01\x00").unwrap();
    let out = morphguard(dir.path(), &["eval", "--config", "cfg.json", "--checkpoint", "junk.ckpt"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    assert_eq!(code(&["--help"]), 0);
}
