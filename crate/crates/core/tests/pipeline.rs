use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;

use drowsy::dataset::Partition;
use drowsy::models::ModelCheckpoint;
use drowsy::pipeline::{
    cmd_prepare, cmd_report, cmd_run_all, cmd_tune, load_prepared, load_split, EvaluationFile, ImportanceArtifact,
    Report, RunConfig, Target, TrainLog,
};

struct Fixture {
    _dir: tempfile::TempDir,
    cfg: RunConfig,
    report: Report,
}

/// One reduced run shared by every test in this file.
fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::small(dir.path().join("work"), 42);
        let report = cmd_run_all(&cfg, |_| {}).unwrap();
        Fixture { _dir: dir, cfg, report }
    })
}

fn read<T: serde::de::DeserializeOwned>(p: impl AsRef<Path>) -> T {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn model_dir(name: &str) -> PathBuf {
    let f = fixture();
    f.cfg.model_dir(&name.parse::<Target>().unwrap())
}

#[test]
fn splits_are_disjoint_and_valid() {
    let f = fixture();
    let (split, _) = load_prepared(&f.cfg).unwrap();
    assert!(split.overlaps().is_empty());
    assert_eq!(split.test_participants().len(), 5);
    for s in split.train.iter().chain(&split.val).chain(&split.test) {
        s.validate().unwrap();
        assert!(!s.synthetic);
    }
    assert_eq!(load_split(&f.cfg, Partition::Test).unwrap(), split.test);
}

#[test]
fn prepare_is_reproducible() {
    let f = fixture();
    let other = tempfile::tempdir().unwrap();
    let mut cfg = f.cfg.clone();
    cfg.corpus_dir = Some(f.cfg.corpus_dir());
    cfg.workdir = other.path().to_path_buf();
    let again = cmd_prepare(&cfg).unwrap();
    let first: drowsy::pipeline::SplitManifest = read(f.cfg.prepared_dir().join("split_manifest.json"));
    assert_eq!(again.test_participants, first.test_participants);
    assert_eq!(again.val_participants, first.val_participants);
    assert_eq!(again.train_counts, first.train_counts);
    for name in ["train.bin", "val.bin", "test.bin", "normalizer.json"] {
        assert_eq!(
            fs::read(cfg.prepared_dir().join(name)).unwrap(),
            fs::read(f.cfg.prepared_dir().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn forest_writes_ranked_importance() {
    let imp: ImportanceArtifact = read(model_dir("rf-baseline").join("importance.json"));
    assert_eq!(imp.channels.len(), 18);
    assert!(imp.channels.windows(2).all(|w| w[0].1 >= w[1].1));
    let total: f64 = imp.report.per_feature.iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(fixture().report.importance.is_some());
}

#[test]
fn encoder_model_has_two_checkpoints() {
    let dir = model_dir("mlp-enc");
    let ck = ModelCheckpoint::from_json(&fs::read_to_string(dir.join("checkpoint.json")).unwrap()).unwrap();
    assert_eq!(ck.encoder.as_deref(), Some("autoencoder.json"));
    let ae = ModelCheckpoint::from_json(&fs::read_to_string(dir.join("autoencoder.json")).unwrap()).unwrap();
    assert_eq!(ae.model, drowsy::models::ModelName::Autoencoder);
    let log: TrainLog = read(dir.join("train_log.json"));
    assert!(log.autoencoder_history.is_some());
}

#[test]
fn smote_log_shows_equalized_classes() {
    let log: TrainLog = read(model_dir("conv2d-raw-smote").join("train_log.json"));
    let before = log.counts_before_smote.unwrap();
    let top = *before.iter().max().unwrap();
    assert_eq!(log.class_counts, [top; 3]);
}

#[test]
fn thresholds_change_decisions_not_auc() {
    for row in &fixture().report.rows {
        let e: EvaluationFile = read(model_dir(&row.model).join("eval.json"));
        let after = e.after.as_ref().unwrap();
        assert_eq!(e.before.macro_auc, after.macro_auc);
        for r in [&e.before, after] {
            let total: usize = r.confusion.iter().flatten().sum();
            assert_eq!(total, r.n_samples);
        }
        assert!(after.thresholds.is_some());
        assert!(fs::read_to_string(model_dir(&row.model).join("eval.txt")).unwrap().contains("after thresholding"));
    }
}

#[test]
fn tuning_is_deterministic() {
    let f = fixture();
    let t: Target = "mlp-raw".parse().unwrap();
    let path = f.cfg.model_dir(&t).join("thresholds.json");
    let before = fs::read(&path).unwrap();
    let file = cmd_tune(&f.cfg, t).unwrap();
    assert_eq!(fs::read(&path).unwrap(), before);
    assert!(file.thresholds.t_slight.is_finite() && file.thresholds.t_modext.is_finite());
}

#[test]
fn report_covers_every_target_and_is_idempotent() {
    let f = fixture();
    let names: Vec<&str> = f.report.rows.iter().map(|r| r.model.as_str()).collect();
    assert_eq!(names, ["conv2d-raw-smote", "mlp-enc", "mlp-raw", "rf-baseline"]);
    assert_eq!(f.report.thresholded.len(), 4);
    let path = f.cfg.workdir.join("report.json");
    let before = fs::read(&path).unwrap();
    let again = cmd_report(&f.cfg).unwrap();
    assert_eq!(again, f.report);
    assert_eq!(fs::read(&path).unwrap(), before);
    for r in &f.report.rows {
        assert!(r.macro_auc.is_finite());
    }
}

fn drowsy_cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_drowsy")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn copy_tree(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for e in fs::read_dir(from).unwrap() {
        let p = e.unwrap().path();
        let dest = to.join(p.file_name().unwrap());
        if p.is_dir() {
            copy_tree(&p, &dest);
        } else {
            fs::copy(&p, &dest).unwrap();
        }
    }
}

#[test]
fn cli_success_and_failure_exit_codes() {
    let (code, _, err) = drowsy_cli(&["train", "svm"]);
    assert_eq!(code, 1);
    assert!(err.contains("unknown-model: svm"), "{err}");

    let (code, out, _) = drowsy_cli(&["config", "--seed", "3"]);
    assert_eq!(code, 0);
    let cfg: RunConfig = serde_json::from_str(&out).unwrap();
    assert_eq!(cfg, RunConfig::default().with_seed(3));

    let empty = tempfile::tempdir().unwrap();
    let (code, _, err) = drowsy_cli(&["evaluate", "rf-baseline", "--workdir", empty.path().to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error: io:"), "{err}");

    // Evaluate a copy of the shared forest through the binary.
    let f = fixture();
    let work = tempfile::tempdir().unwrap();
    let mut cfg = f.cfg.clone();
    cfg.workdir = work.path().join("w");
    copy_tree(&f.cfg.prepared_dir(), &cfg.prepared_dir());
    copy_tree(&model_dir("rf-baseline"), &cfg.model_dir(&Target::Forest));
    let cfg_path = work.path().join("run.json");
    fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let (code, out, err) = drowsy_cli(&["--config", cfg_path.to_str().unwrap(), "evaluate", "rf-baseline", "--thresholds"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("after thresholding"));
    let a: EvaluationFile = read(cfg.model_dir(&Target::Forest).join("eval.json"));
    let b: EvaluationFile = read(model_dir("rf-baseline").join("eval.json"));
    assert_eq!((a.before, a.after), (b.before, b.after));
}
