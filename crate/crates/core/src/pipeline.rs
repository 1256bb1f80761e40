//! End-to-end orchestration over a work directory:
//!
//! ```text
//! <workdir>/corpus/{manifest.json, frames/*.csv}
//! <workdir>/prepared/{train,val,test}.bin, split_manifest.json, normalizer.json
//! <workdir>/models/<target>/checkpoint.json, train_log.json, thresholds.json, eval.json, eval.txt
//! <workdir>/report.{json,txt}
//! ```
//!
//! Every artifact embeds the effective [`RunConfig`]. Nothing records wall
//! time, so repeated runs are byte-identical.

use std::fmt;
use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::balance::{smote_oversample, SmoteConfig};
use crate::dataset::{
    class_counts, parse_frames, read_samples, samples_from_frames, split_by_participant, write_samples,
    ChannelNormalizer, DatasetSplit, MergedLabel, Partition, SampleDescriptor, SplitConfig, WindowConfig,
};
use crate::error::{Error, Result};
use crate::eval::{
    evaluate as score_report, render_confusion, render_table, tune_threshold, EvalReport, Objective,
    ThresholdChoice, ThresholdPair,
};
use crate::features::featurize_all;
use crate::forest::{fit_forest, ForestConfig, ImportanceReport, RandomForest};
use crate::models::{
    train_autoencoder, train_classifier, Autoencoder, Classifier, History, ModelCheckpoint, ModelName,
    TrainConfig,
};
use crate::seed;
use crate::synth::{generate_corpus, CorpusManifest, GeneratorConfig, FRAMES_DIR, MANIFEST_FILE};

pub const ARTIFACT_FORMAT_VERSION: u32 = 1;
const FOREST_NAME: &str = "rf-baseline";
const SMOTE_SUFFIX: &str = "-smote";
const AUTOENCODER_FILE: &str = "autoencoder.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Every module seed is derived from this one.
    pub seed: u64,
    pub workdir: PathBuf,
    /// Defaults to `<workdir>/corpus`.
    pub corpus_dir: Option<PathBuf>,
    pub generator: GeneratorConfig,
    pub window: WindowConfig,
    pub split: SplitConfig,
    pub normalize: bool,
    pub forest: ForestConfig,
    pub train: TrainConfig,
    pub smote: SmoteConfig,
    pub tune_thresholds: bool,
    pub objective: Objective,
    /// Targets trained by `run-all`.
    pub models: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            workdir: PathBuf::from("work"),
            corpus_dir: None,
            generator: GeneratorConfig::default(),
            window: WindowConfig::default(),
            split: SplitConfig::default(),
            normalize: true,
            forest: ForestConfig::default(),
            train: TrainConfig::default(),
            smote: SmoteConfig::default(),
            tune_thresholds: true,
            objective: Objective::Youden,
            models: Target::all().iter().map(|t| t.to_string()).collect(),
        }
        .with_seed(42)
    }
}

impl RunConfig {
    /// Set the top-level seed and derive every module seed from it.
    pub fn with_seed(mut self, top: u64) -> Self {
        self.seed = top;
        self.generator.seed = seed::derive(top, "generate");
        self.split.seed = seed::derive(top, "split");
        self.forest.seed = seed::derive(top, "forest");
        self.train.seed = seed::derive(top, "train");
        self.smote.seed = seed::derive(top, "smote");
        self
    }

    /// A few-minute configuration for smoke runs: 24 five-minute videos, 5
    /// test participants, small forest, two epochs, four targets. With so
    /// few participants some seeds leave a split without a class; 42 does not.
    pub fn small(workdir: impl Into<PathBuf>, top: u64) -> Self {
        let mut cfg = RunConfig {
            workdir: workdir.into(),
            ..RunConfig::default()
        };
        cfg.generator.n_participants = 24;
        cfg.generator.video_frames = 9000;
        cfg.split.n_test_participants = 5;
        cfg.forest.n_trees = 10;
        cfg.train.epochs = 2;
        cfg.models = ["rf-baseline", "mlp-raw", "mlp-enc", "conv2d-raw-smote"]
            .map(String::from)
            .to_vec();
        cfg.with_seed(top)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        Ok(cfg)
    }

    pub fn corpus_dir(&self) -> PathBuf {
        self.corpus_dir.clone().unwrap_or_else(|| self.workdir.join("corpus"))
    }

    pub fn prepared_dir(&self) -> PathBuf {
        self.workdir.join("prepared")
    }

    pub fn model_dir(&self, target: &Target) -> PathBuf {
        self.workdir.join("models").join(target.to_string())
    }

    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        self.forest.validate()?;
        if self.train.epochs == 0 || self.train.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be at least 1".into()));
        }
        for m in &self.models {
            m.parse::<Target>()?;
        }
        Ok(())
    }
}

/// What `train`, `tune` and `evaluate` operate on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Target {
    Forest,
    Neural { model: ModelName, smote: bool },
}

impl Target {
    /// The eight comparison rows: the forest, six networks and SMOTE Conv2D.
    pub fn all() -> Vec<Target> {
        let mut v = vec![Target::Forest];
        for model in ModelName::ALL {
            if model != ModelName::Autoencoder {
                v.push(Target::Neural { model, smote: false });
            }
        }
        v.push(Target::Neural {
            model: ModelName::Conv2dRaw,
            smote: true,
        });
        v
    }

    pub fn is_classifier(&self) -> bool {
        !matches!(self, Target::Neural { model: ModelName::Autoencoder, .. })
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Forest => f.write_str(FOREST_NAME),
            Target::Neural { model, smote } => {
                write!(f, "{model}{}", if *smote { SMOTE_SUFFIX } else { "" })
            }
        }
    }
}

impl FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == FOREST_NAME {
            return Ok(Target::Forest);
        }
        let (base, smote) = match s.strip_suffix(SMOTE_SUFFIX) {
            Some(b) => (b, true),
            None => (s, false),
        };
        let model: ModelName = base.parse()?;
        if smote && model == ModelName::Autoencoder {
            return Err(Error::UnknownModel(s.to_string()));
        }
        Ok(Target::Neural { model, smote })
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Checkpoints are written compactly; they can reach tens of megabytes.
fn write_checkpoint(path: &Path, mut ck: ModelCheckpoint, cfg: &RunConfig) -> Result<()> {
    ck.config = Some(serde_json::to_value(cfg)?);
    write_text(path, &(ck.to_json()? + "\n"))
}

fn read_checkpoint(path: &Path) -> Result<ModelCheckpoint> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ModelCheckpoint::from_json(&text)
}

pub fn cmd_generate(cfg: &RunConfig) -> Result<CorpusManifest> {
    generate_corpus(&cfg.generator, &cfg.corpus_dir())
}

/// Frame CSV files of a corpus: the manifest's list when there is one,
/// otherwise every CSV under `frames/` in name order.
pub fn corpus_files(corpus: &Path) -> Result<Vec<PathBuf>> {
    let manifest = corpus.join(MANIFEST_FILE);
    if manifest.is_file() {
        let m: CorpusManifest = read_json(&manifest)?;
        return Ok(m.videos.iter().map(|v| corpus.join(&v.file)).collect());
    }
    let dir = corpus.join(FRAMES_DIR);
    let entries = fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut files = Vec::new();
    for e in entries {
        let p = e.map_err(|e| Error::io(&dir, e))?.path();
        if p.extension().is_some_and(|x| x == "csv") {
            files.push(p);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::EmptyInput(format!("no frame files under {}", dir.display())));
    }
    Ok(files)
}

/// Parse and window every corpus file.
pub fn load_samples(corpus: &Path, window: &WindowConfig) -> Result<Vec<SampleDescriptor>> {
    let mut samples = Vec::new();
    for path in corpus_files(corpus)? {
        let f = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        let frames = parse_frames(BufReader::new(f)).map_err(|e| match e {
            Error::Parse { line, message } => Error::Parse {
                line,
                message: format!("{}: {message}", path.display()),
            },
            Error::Validation { line, message } => Error::Validation {
                line,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        })?;
        samples.extend(samples_from_frames(&frames, window)?);
    }
    Ok(samples)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub format_version: u32,
    pub config: RunConfig,
    pub train_participants: Vec<String>,
    pub val_participants: Vec<String>,
    pub test_participants: Vec<String>,
    pub train_counts: [usize; 3],
    pub val_counts: [usize; 3],
    pub test_counts: [usize; 3],
}

fn split_file(dir: &Path, p: Partition) -> PathBuf {
    dir.join(format!("{}.bin", p.name()))
}

pub fn cmd_prepare(cfg: &RunConfig) -> Result<SplitManifest> {
    cfg.validate()?;
    let samples = load_samples(&cfg.corpus_dir(), &cfg.window)?;
    let split = split_by_participant(samples, &cfg.split)?;
    let overlaps = split.overlaps();
    if !overlaps.is_empty() {
        return Err(Error::Contract(format!("participants in several splits: {}", overlaps.join(", "))));
    }
    let normalizer = if cfg.normalize {
        ChannelNormalizer::fit(&split.train)?
    } else {
        ChannelNormalizer::identity()
    };
    let dir = cfg.prepared_dir();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for (p, set) in [
        (Partition::Train, &split.train),
        (Partition::Validation, &split.val),
        (Partition::Test, &split.test),
    ] {
        let path = split_file(&dir, p);
        let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_samples(BufWriter::new(f), set).map_err(|e| Error::io(&path, e))?;
    }
    write_json(&dir.join("normalizer.json"), &normalizer)?;
    let names = |s: std::collections::BTreeSet<&str>| s.into_iter().map(String::from).collect();
    let manifest = SplitManifest {
        format_version: ARTIFACT_FORMAT_VERSION,
        config: cfg.clone(),
        train_participants: names(split.train_participants()),
        val_participants: names(split.val_participants()),
        test_participants: names(split.test_participants()),
        train_counts: class_counts(&split.train),
        val_counts: class_counts(&split.val),
        test_counts: class_counts(&split.test),
    };
    write_json(&dir.join("split_manifest.json"), &manifest)?;
    Ok(manifest)
}

pub fn load_split(cfg: &RunConfig, p: Partition) -> Result<Vec<SampleDescriptor>> {
    let path = split_file(&cfg.prepared_dir(), p);
    let f = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    read_samples(BufReader::new(f))
}

pub fn load_prepared(cfg: &RunConfig) -> Result<(DatasetSplit, ChannelNormalizer)> {
    let split = DatasetSplit {
        train: load_split(cfg, Partition::Train)?,
        val: load_split(cfg, Partition::Validation)?,
        test: load_split(cfg, Partition::Test)?,
    };
    let normalizer = read_json(&cfg.prepared_dir().join("normalizer.json"))?;
    Ok((split, normalizer))
}

/// Forest checkpoint: header plus the trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestCheckpoint {
    pub format_version: u32,
    pub model: String,
    pub seed: u64,
    pub config: RunConfig,
    pub normalizer: ChannelNormalizer,
    pub forest: RandomForest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestStats {
    pub n_trees: usize,
    pub mean_depth: f64,
    pub mean_nodes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub format_version: u32,
    pub model: String,
    pub config: RunConfig,
    /// Class counts of the set the first epoch sees.
    pub class_counts: [usize; 3],
    #[serde(default)]
    pub counts_before_smote: Option<[usize; 3]>,
    #[serde(default)]
    pub history: Option<History>,
    #[serde(default)]
    pub autoencoder_history: Option<History>,
    #[serde(default)]
    pub forest: Option<ForestStats>,
}

/// A trained model of either family, ready to score raw samples.
pub enum LoadedModel {
    Forest {
        forest: RandomForest,
        normalizer: ChannelNormalizer,
    },
    Neural(Box<Classifier>),
}

impl LoadedModel {
    pub fn predict_scores(&mut self, samples: &[SampleDescriptor]) -> Result<Vec<[f64; 3]>> {
        match self {
            LoadedModel::Forest { forest, normalizer } => {
                let rows: Vec<Vec<f64>> = featurize_all(&normalizer.apply_all(samples))
                    .into_iter()
                    .map(|f| f.values)
                    .collect();
                forest.predict_proba_all(&rows)
            }
            LoadedModel::Neural(c) => c.predict_scores(samples),
        }
    }
}

pub fn cmd_train(cfg: &RunConfig, target: Target) -> Result<TrainLog> {
    cfg.validate()?;
    let (split, normalizer) = load_prepared(cfg)?;
    let dir = cfg.model_dir(&target);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut log = TrainLog {
        format_version: ARTIFACT_FORMAT_VERSION,
        model: target.to_string(),
        config: cfg.clone(),
        class_counts: class_counts(&split.train),
        counts_before_smote: None,
        history: None,
        autoencoder_history: None,
        forest: None,
    };
    let train_n = normalizer.apply_all(&split.train);
    match target {
        Target::Forest => {
            let feats = featurize_all(&train_n);
            let x: Vec<Vec<f64>> = feats.iter().map(|f| f.values.clone()).collect();
            let y: Vec<MergedLabel> = feats.iter().map(|f| f.label).collect();
            let forest = fit_forest(&x, &y, &cfg.forest)?;
            let n = forest.trees.len() as f64;
            log.forest = Some(ForestStats {
                n_trees: forest.trees.len(),
                mean_depth: forest.trees.iter().map(|t| t.depth() as f64).sum::<f64>() / n,
                mean_nodes: forest.trees.iter().map(|t| t.nodes.len() as f64).sum::<f64>() / n,
            });
            let importance = forest.feature_importance()?;
            write_json(&dir.join("importance.json"), &ImportanceArtifact::new(cfg, importance))?;
            let ck = ForestCheckpoint {
                format_version: ARTIFACT_FORMAT_VERSION,
                model: FOREST_NAME.to_string(),
                seed: cfg.forest.seed,
                config: cfg.clone(),
                normalizer,
                forest,
            };
            write_text(&dir.join("checkpoint.json"), &(serde_json::to_string(&ck)? + "\n"))?;
        }
        Target::Neural { model: ModelName::Autoencoder, .. } => {
            let (ae, hist) = train_autoencoder(&train_n, &normalizer, &cfg.train)?;
            log.history = Some(hist);
            write_checkpoint(&dir.join("checkpoint.json"), ae.to_checkpoint(), cfg)?;
        }
        Target::Neural { model, smote } => {
            let val_n = normalizer.apply_all(&split.val);
            let train_set = if smote {
                log.counts_before_smote = Some(class_counts(&train_n));
                smote_oversample(&train_n, Partition::Train, &cfg.smote)?
            } else {
                train_n
            };
            log.class_counts = class_counts(&train_set);
            let encoder = if model == ModelName::MlpEnc {
                let (ae, hist) = train_autoencoder(&train_set, &normalizer, &cfg.train)?;
                write_checkpoint(&dir.join(AUTOENCODER_FILE), ae.to_checkpoint(), cfg)?;
                log.autoencoder_history = Some(hist);
                Some(ae)
            } else {
                None
            };
            let enc_file = encoder.as_ref().map(|_| AUTOENCODER_FILE.to_string());
            let (clf, hist) = train_classifier(model, &train_set, &val_n, &normalizer, &cfg.train, encoder)?;
            log.history = Some(hist);
            write_checkpoint(&dir.join("checkpoint.json"), clf.to_checkpoint(enc_file), cfg)?;
        }
    }
    write_json(&dir.join("train_log.json"), &log)?;
    Ok(log)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceArtifact {
    pub config: RunConfig,
    pub channels: Vec<(String, f64)>,
    pub report: ImportanceReport,
}

impl ImportanceArtifact {
    fn new(cfg: &RunConfig, report: ImportanceReport) -> Self {
        let channels = report
            .channel_ranking()
            .into_iter()
            .map(|c| (crate::dataset::CHANNEL_NAMES[c].to_string(), report.per_channel[c]))
            .collect();
        ImportanceArtifact {
            config: cfg.clone(),
            channels,
            report,
        }
    }
}

pub fn load_model(cfg: &RunConfig, target: Target) -> Result<LoadedModel> {
    let dir = cfg.model_dir(&target);
    let path = dir.join("checkpoint.json");
    match target {
        Target::Forest => {
            let ck: ForestCheckpoint = read_json(&path)?;
            if ck.format_version != ARTIFACT_FORMAT_VERSION {
                return Err(Error::Format(format!("forest checkpoint format {}", ck.format_version)));
            }
            Ok(LoadedModel::Forest {
                forest: ck.forest,
                normalizer: ck.normalizer,
            })
        }
        Target::Neural { model: ModelName::Autoencoder, .. } => {
            Err(Error::UnknownModel("autoencoder produces no class scores".into()))
        }
        Target::Neural { .. } => {
            let ck = read_checkpoint(&path)?;
            let encoder = match &ck.encoder {
                Some(file) => Some(Autoencoder::from_checkpoint(read_checkpoint(&dir.join(file))?)?),
                None => None,
            };
            Ok(LoadedModel::Neural(Box::new(Classifier::from_checkpoint(ck, encoder)?)))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFile {
    pub format_version: u32,
    pub model: String,
    pub config: RunConfig,
    pub objective: Objective,
    pub thresholds: ThresholdPair,
    pub slight: ThresholdChoice,
    pub modext: ThresholdChoice,
}

/// Tune both thresholds on validation scores.
pub fn tune_on_scores(scores: &[[f64; 3]], labels: &[MergedLabel], objective: Objective) -> Result<(ThresholdChoice, ThresholdChoice)> {
    let pick = |c: MergedLabel| -> Result<ThresholdChoice> {
        let s: Vec<f64> = scores.iter().map(|r| r[c.index()]).collect();
        let l: Vec<bool> = labels.iter().map(|&x| x == c).collect();
        tune_threshold(&s, &l, objective).map_err(|e| match e {
            Error::UndefinedAuc(m) => Error::MissingClass(format!("validation lacks {}: {m}", c.name())),
            other => other,
        })
    };
    Ok((pick(MergedLabel::Slight)?, pick(MergedLabel::ModExt)?))
}

pub fn cmd_tune(cfg: &RunConfig, target: Target) -> Result<ThresholdFile> {
    let val = load_split(cfg, Partition::Validation)?;
    let mut model = load_model(cfg, target)?;
    let scores = model.predict_scores(&val)?;
    let labels: Vec<MergedLabel> = val.iter().map(|s| s.label).collect();
    let (slight, modext) = tune_on_scores(&scores, &labels, cfg.objective)?;
    let file = ThresholdFile {
        format_version: ARTIFACT_FORMAT_VERSION,
        model: target.to_string(),
        config: cfg.clone(),
        objective: cfg.objective,
        thresholds: ThresholdPair {
            t_slight: slight.threshold,
            t_modext: modext.threshold,
        },
        slight,
        modext,
    };
    write_json(&cfg.model_dir(&target).join("thresholds.json"), &file)?;
    Ok(file)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationFile {
    pub format_version: u32,
    pub model: String,
    pub config: RunConfig,
    /// Argmax decisions.
    pub before: EvalReport,
    /// Thresholded decisions, when thresholds were supplied.
    pub after: Option<EvalReport>,
}

impl EvaluationFile {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut rows = vec![self.before.clone()];
        if let Some(a) = &self.after {
            let mut a = a.clone();
            a.model = format!("{} (thresholded)", a.model);
            rows.push(a);
        }
        out.push_str(&render_table(&rows));
        out.push_str("\nbefore thresholding\n");
        out.push_str(&render_confusion(&self.before.confusion));
        if let Some(a) = &self.after {
            if let Some(t) = &a.thresholds {
                out.push_str(&format!(
                    "\nafter thresholding (t_slight = {:.6}, t_modext = {:.6})\n",
                    t.t_slight, t.t_modext
                ));
            }
            out.push_str(&render_confusion(&a.confusion));
        }
        out
    }
}

/// Score the test split; `thresholds` switches on the decision rule.
pub fn cmd_evaluate(cfg: &RunConfig, target: Target, thresholds: Option<&Path>) -> Result<EvaluationFile> {
    let test = load_split(cfg, Partition::Test)?;
    let mut model = load_model(cfg, target)?;
    let scores = model.predict_scores(&test)?;
    if let Some(bad) = scores.iter().position(|r| r.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite(format!("score row {bad}")));
    }
    let labels: Vec<MergedLabel> = test.iter().map(|s| s.label).collect();
    let name = target.to_string();
    let before = score_report(&name, &scores, &labels, None)?;
    let after = match thresholds {
        Some(p) => {
            let file: ThresholdFile = read_json(p)?;
            Some(score_report(&name, &scores, &labels, Some(file.thresholds))?)
        }
        None => None,
    };
    let file = EvaluationFile {
        format_version: ARTIFACT_FORMAT_VERSION,
        model: name,
        config: cfg.clone(),
        before,
        after,
    };
    let dir = cfg.model_dir(&target);
    write_json(&dir.join("eval.json"), &file)?;
    write_text(&dir.join("eval.txt"), &file.render())?;
    Ok(file)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format_version: u32,
    pub config: RunConfig,
    /// Argmax rows, sorted by model name.
    pub rows: Vec<EvalReport>,
    pub thresholded: Vec<EvalReport>,
    /// Workdir-relative path of the forest importance report, when present.
    pub importance: Option<String>,
}

impl Report {
    pub fn render(&self) -> String {
        let mut out = render_table(&self.rows);
        if !self.thresholded.is_empty() {
            out.push_str("\nwith tuned thresholds\n");
            out.push_str(&render_table(&self.thresholded));
        }
        if let Some(p) = &self.importance {
            out.push_str(&format!("\nforest importance: {p}\n"));
        }
        out
    }
}

pub fn cmd_report(cfg: &RunConfig) -> Result<Report> {
    let models = cfg.workdir.join("models");
    let mut names = Vec::new();
    if models.is_dir() {
        for e in fs::read_dir(&models).map_err(|e| Error::io(&models, e))? {
            let p = e.map_err(|e| Error::io(&models, e))?.path();
            if p.join("eval.json").is_file() {
                names.push(p.file_name().unwrap_or_default().to_string_lossy().into_owned());
            }
        }
    }
    names.sort();
    if names.is_empty() {
        return Err(Error::EmptyInput(format!("no evaluations under {}", models.display())));
    }
    let mut report = Report {
        format_version: ARTIFACT_FORMAT_VERSION,
        config: cfg.clone(),
        rows: Vec::new(),
        thresholded: Vec::new(),
        importance: None,
    };
    for n in &names {
        let e: EvaluationFile = read_json(&models.join(n).join("eval.json"))?;
        report.rows.push(e.before);
        report.thresholded.extend(e.after);
        if n == FOREST_NAME && models.join(n).join("importance.json").is_file() {
            report.importance = Some(format!("models/{FOREST_NAME}/importance.json"));
        }
    }
    write_json(&cfg.workdir.join("report.json"), &report)?;
    write_text(&cfg.workdir.join("report.txt"), &report.render())?;
    Ok(report)
}

/// generate → prepare → train/tune/evaluate each configured target → report.
pub fn cmd_run_all(cfg: &RunConfig, mut progress: impl FnMut(&str)) -> Result<Report> {
    cfg.validate()?;
    let manifest = cmd_generate(cfg)?;
    progress(&format!(
        "generated {} participants, {} videos",
        manifest.participants.len(),
        manifest.videos.len()
    ));
    let split = cmd_prepare(cfg)?;
    progress(&format!(
        "prepared train {:?} val {:?} test {:?}",
        split.train_counts, split.val_counts, split.test_counts
    ));
    for name in &cfg.models {
        let target: Target = name.parse()?;
        cmd_train(cfg, target)?;
        if !target.is_classifier() {
            progress(&format!("trained {target}"));
            continue;
        }
        let thresholds = if cfg.tune_thresholds {
            cmd_tune(cfg, target)?;
            Some(cfg.model_dir(&target).join("thresholds.json"))
        } else {
            None
        };
        let eval = cmd_evaluate(cfg, target, thresholds.as_deref())?;
        progress(&format!("{target}: test macro AUC {:.4}", eval.before.macro_auc));
    }
    cmd_report(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_names_round_trip() {
        for t in Target::all() {
            assert_eq!(t.to_string().parse::<Target>().unwrap(), t);
        }
        assert_eq!(
            "conv2d-raw-smote".parse::<Target>().unwrap(),
            Target::Neural {
                model: ModelName::Conv2dRaw,
                smote: true
            }
        );
        assert!("autoencoder-smote".parse::<Target>().is_err());
        assert!("svm".parse::<Target>().is_err());
    }

    #[test]
    fn seeds_follow_top_seed() {
        let a = RunConfig::default().with_seed(7);
        let b = RunConfig::default().with_seed(7);
        let c = RunConfig::default().with_seed(8);
        assert_eq!(a, b);
        assert_ne!(a.train.seed, c.train.seed);
        assert_ne!(a.train.seed, a.forest.seed);
    }
}
