//! The concrete architectures, their input layouts, the mini-batch Adam
//! training loops and the JSON checkpoint format.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{class_counts, ChannelNormalizer, SampleDescriptor, N_CHANNELS, N_STEPS};
use crate::error::{Error, Result};
use crate::features::{featurize_sample, N_FEATURES};
use crate::neural::{adam_step, ops, AdamConfig, AdamState, LayerSpec, Mode, Network, Tensor};
use crate::seed;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;
const LEAK: f64 = 0.01;
const DROPOUT: f64 = 0.3;
const INFERENCE_BATCH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    MlpStats,
    MlpRaw,
    MlpEnc,
    Autoencoder,
    Conv1dRaw,
    Conv2dRaw,
    LstmRaw,
}

impl ModelName {
    pub const ALL: [ModelName; 7] = [
        ModelName::MlpStats,
        ModelName::MlpRaw,
        ModelName::MlpEnc,
        ModelName::Autoencoder,
        ModelName::Conv1dRaw,
        ModelName::Conv2dRaw,
        ModelName::LstmRaw,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelName::MlpStats => "mlp-stats",
            ModelName::MlpRaw => "mlp-raw",
            ModelName::MlpEnc => "mlp-enc",
            ModelName::Autoencoder => "autoencoder",
            ModelName::Conv1dRaw => "conv1d-raw",
            ModelName::Conv2dRaw => "conv2d-raw",
            ModelName::LstmRaw => "lstm-raw",
        }
    }

    pub fn input_layout(self) -> InputLayout {
        match self {
            ModelName::MlpStats => InputLayout::Statistics,
            ModelName::MlpRaw | ModelName::Autoencoder => InputLayout::Flat,
            ModelName::MlpEnc => InputLayout::Encoded,
            ModelName::Conv1dRaw => InputLayout::Channels,
            ModelName::Conv2dRaw => InputLayout::Image,
            ModelName::LstmRaw => InputLayout::Sequence,
        }
    }
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelName::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownModel(s.to_string()))
    }
}

/// How a sample descriptor is presented to a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputLayout {
    /// 108 statistics, standardized.
    Statistics,
    /// 1800 values, channel-major.
    Flat,
    /// 108 encoder outputs, standardized.
    Encoded,
    /// `[18, 100]`
    Channels,
    /// `[1, 18, 100]`
    Image,
    /// `[100, 18]`
    Sequence,
}

impl InputLayout {
    pub fn shape(self) -> Vec<usize> {
        match self {
            InputLayout::Statistics | InputLayout::Encoded => vec![N_FEATURES],
            InputLayout::Flat => vec![N_CHANNELS * N_STEPS],
            InputLayout::Channels => vec![N_CHANNELS, N_STEPS],
            InputLayout::Image => vec![1, N_CHANNELS, N_STEPS],
            InputLayout::Sequence => vec![N_STEPS, N_CHANNELS],
        }
    }

    fn needs_scaler(self) -> bool {
        matches!(self, InputLayout::Statistics | InputLayout::Encoded)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: ModelName,
    pub layers: Vec<LayerSpec>,
    pub input_shape: Vec<usize>,
    pub output_shape: Vec<usize>,
    /// Number of leading layers forming the encoder (autoencoder only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoder_layers: Option<usize>,
}

fn dense_stack(widths: &[usize], leak_last: bool) -> Vec<LayerSpec> {
    let mut layers = Vec::new();
    for (k, w) in widths.windows(2).enumerate() {
        layers.push(LayerSpec::Dense { input: w[0], units: w[1] });
        if leak_last || k + 2 < widths.len() {
            layers.push(LayerSpec::LeakyRelu { slope: LEAK });
        }
    }
    layers
}

const ENCODER_WIDTHS: [usize; 5] = [N_CHANNELS * N_STEPS, 900, 450, 216, N_FEATURES];

pub fn build_model(name: ModelName) -> Result<ModelSpec> {
    let mut encoder_layers = None;
    let layers = match name {
        ModelName::MlpStats | ModelName::MlpEnc => dense_stack(&[N_FEATURES, 4, 3], false),
        ModelName::MlpRaw => dense_stack(&[N_CHANNELS * N_STEPS, 4, 3], false),
        ModelName::Autoencoder => {
            let mut l = dense_stack(&ENCODER_WIDTHS, true);
            encoder_layers = Some(l.len());
            let mut rev = ENCODER_WIDTHS;
            rev.reverse();
            // Reconstruction targets are z-scores, so the output layer stays linear.
            l.extend(dense_stack(&rev, false));
            l
        }
        ModelName::Conv1dRaw => {
            let mut l = Vec::new();
            for (cin, cout, kernel) in [(N_CHANNELS, 32, 5), (32, 64, 5), (64, 64, 3), (64, 128, 3)] {
                l.push(LayerSpec::Conv1d { in_channels: cin, out_channels: cout, kernel, stride: 2 });
                l.push(LayerSpec::LeakyRelu { slope: LEAK });
            }
            l.extend([
                LayerSpec::Dropout { rate: DROPOUT },
                LayerSpec::GlobalAvgPool,
                LayerSpec::Dense { input: 128, units: 3 },
            ]);
            l
        }
        ModelName::Conv2dRaw => {
            let mut l = Vec::new();
            for (cin, cout, stride) in [(1, 16, [2, 2]), (16, 32, [2, 2]), (32, 64, [1, 2])] {
                l.push(LayerSpec::Conv2d { in_channels: cin, out_channels: cout, kernel: [3, 3], stride });
                l.push(LayerSpec::LeakyRelu { slope: LEAK });
            }
            l.extend([
                LayerSpec::Dropout { rate: DROPOUT },
                LayerSpec::GlobalAvgPool,
                LayerSpec::Dense { input: 64, units: 3 },
            ]);
            l
        }
        ModelName::LstmRaw => vec![
            LayerSpec::Lstm { input: N_CHANNELS, hidden: 64 },
            LayerSpec::Lstm { input: 64, hidden: 64 },
            LayerSpec::LastStep,
            LayerSpec::Dense { input: 64, units: 3 },
        ],
    };
    let input_shape = name.input_layout().shape();
    let output_shape = Network::check_chain(&input_shape, &layers)?;
    Ok(ModelSpec {
        name,
        layers,
        input_shape,
        output_shape,
        encoder_layers,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub shuffle: bool,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 64,
            seed: 0,
            shuffle: true,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-epoch mean losses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// Training class counts seen by the loop (after any oversampling).
    pub class_counts: [usize; 3],
}

/// Z-score over feature vectors (statistics or encodings).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureScaler {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::EmptyInput("scaler needs rows".into()));
        };
        let d = first.len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut std = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in std.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        std.iter_mut()
            .for_each(|s| *s = (*s / n).sqrt().max(crate::dataset::STD_FLOOR));
        Ok(FeatureScaler { mean, std })
    }

    pub fn apply(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = (*v - m) / s;
        }
    }
}

fn layout_rows(layout: InputLayout, samples: &[SampleDescriptor]) -> Vec<Vec<f64>> {
    samples
        .iter()
        .map(|s| match layout {
            InputLayout::Statistics => featurize_sample(s).values,
            InputLayout::Flat | InputLayout::Channels | InputLayout::Image | InputLayout::Encoded => {
                s.grid.clone()
            }
            InputLayout::Sequence => {
                let mut out = vec![0.0; N_CHANNELS * N_STEPS];
                for c in 0..N_CHANNELS {
                    for t in 0..N_STEPS {
                        out[t * N_CHANNELS + c] = s.grid[c * N_STEPS + t];
                    }
                }
                out
            }
        })
        .collect()
}

fn batch_tensor(rows: &[&[f64]], shape: &[usize]) -> Result<Tensor> {
    let mut full = vec![rows.len()];
    full.extend_from_slice(shape);
    let mut data = Vec::with_capacity(rows.len() * rows.first().map_or(0, |r| r.len()));
    for r in rows {
        data.extend_from_slice(r);
    }
    Tensor::new(full, data)
}

/// Forward in eval mode over `rows` in chunks; returns one output row each.
fn forward_rows(net: &mut Network, rows: &[Vec<f64>], upto: Option<usize>) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(rows.len());
    let shape = net.input_shape.clone();
    let upto = upto.unwrap_or(net.layers.len());
    for chunk in rows.chunks(INFERENCE_BATCH) {
        let refs: Vec<&[f64]> = chunk.iter().map(|r| r.as_slice()).collect();
        let mut h = batch_tensor(&refs, &shape)?;
        for layer in &mut net.layers[..upto] {
            h = layer.forward(h, Mode::Eval)?;
        }
        let width = h.len() / chunk.len();
        out.extend(h.data().chunks(width).map(|r| r.to_vec()));
    }
    Ok(out)
}

enum Objective<'a> {
    CrossEntropy(&'a [usize]),
    Reconstruction,
}

fn batch_loss(out: &Tensor, objective: &Objective<'_>, idx: &[usize], x: &Tensor) -> Result<(f64, Tensor)> {
    match objective {
        Objective::CrossEntropy(labels) => {
            let targets: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
            ops::softmax_cross_entropy(out, &targets)
        }
        Objective::Reconstruction => {
            let target = x.clone().reshape(out.shape())?;
            ops::mae_loss(out, &target)
        }
    }
}

fn mean_loss(net: &mut Network, rows: &[Vec<f64>], objective: &Objective<'_>) -> Result<f64> {
    let outs = forward_rows(net, rows, None)?;
    let mut total = 0.0;
    for (start, chunk) in outs.chunks(INFERENCE_BATCH).enumerate().map(|(k, c)| (k * INFERENCE_BATCH, c)) {
        let width = chunk[0].len();
        let out = Tensor::new(vec![chunk.len(), width], chunk.concat())?;
        let idx: Vec<usize> = (start..start + chunk.len()).collect();
        let x = if matches!(objective, Objective::Reconstruction) {
            Tensor::new(vec![chunk.len(), width], idx.iter().flat_map(|&i| rows[i].iter().copied()).collect())?
        } else {
            Tensor::zeros(&[1])
        };
        total += batch_loss(&out, objective, &idx, &x)?.0 * chunk.len() as f64;
    }
    Ok(total / rows.len() as f64)
}

/// The shared seeded-shuffle mini-batch Adam loop. `rows` are already in
/// canonical order; each epoch draws a fresh permutation.
fn fit_network(
    net: &mut Network,
    rows: &[Vec<f64>],
    val: Option<(&[Vec<f64>], Objective<'_>)>,
    objective: Objective<'_>,
    config: &TrainConfig,
) -> Result<History> {
    config.validate()?;
    if rows.is_empty() {
        return Err(Error::EmptyInput("no training samples".into()));
    }
    let mut adam = AdamState::new(config.adam);
    let mut rng = seed::rng_for(config.seed, "shuffle");
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut history = History::default();
    let shape = net.input_shape.clone();
    for epoch in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut sum = 0.0;
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            let refs: Vec<&[f64]> = idx.iter().map(|&i| rows[i].as_slice()).collect();
            let x = batch_tensor(&refs, &shape)?;
            let out = net.forward(x.clone(), Mode::Train)?;
            let (loss, grad) = batch_loss(&out, &objective, idx, &x)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("loss at epoch {} batch {b}", epoch + 1)));
            }
            net.backward(grad)?;
            adam_step(net, &mut adam).map_err(|e| match e {
                Error::NonFinite(m) => Error::NonFinite(format!("{m} at epoch {} batch {b}", epoch + 1)),
                other => other,
            })?;
            sum += loss * idx.len() as f64;
        }
        history.train_loss.push(sum / rows.len() as f64);
        if let Some((vrows, vobj)) = &val {
            if !vrows.is_empty() {
                let objective = match vobj {
                    Objective::CrossEntropy(l) => Objective::CrossEntropy(l),
                    Objective::Reconstruction => Objective::Reconstruction,
                };
                history.val_loss.push(mean_loss(net, vrows, &objective)?);
            }
        }
    }
    Ok(history)
}

/// Indices of `samples` sorted by provenance key, so storage order never
/// influences batching.
fn canonical_order(samples: &[SampleDescriptor]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..samples.len()).collect();
    idx.sort_by(|&a, &b| samples[a].key().cmp(&samples[b].key()));
    idx
}

pub struct Autoencoder {
    pub spec: ModelSpec,
    pub net: Network,
    pub normalizer: ChannelNormalizer,
    pub seed: u64,
}

impl Autoencoder {
    fn encoder_len(&self) -> usize {
        self.spec.encoder_layers.unwrap_or(0)
    }

    /// Encoder outputs for already normalized samples.
    pub fn encode_normalized(&mut self, samples: &[SampleDescriptor]) -> Result<Vec<Vec<f64>>> {
        if self.encoder_len() == 0 {
            return Err(Error::NotFitted("model has no encoder".into()));
        }
        let rows = layout_rows(InputLayout::Flat, samples);
        let upto = self.encoder_len();
        forward_rows(&mut self.net, &rows, Some(upto))
    }

    /// Normalize raw samples and encode them to 108 values each.
    pub fn encode(&mut self, samples: &[SampleDescriptor]) -> Result<Vec<Vec<f64>>> {
        let normed = self.normalizer.apply_all(samples);
        self.encode_normalized(&normed)
    }

    /// Full reconstruction of raw samples, in normalized units.
    pub fn reconstruct(&mut self, samples: &[SampleDescriptor]) -> Result<Vec<Vec<f64>>> {
        let normed = self.normalizer.apply_all(samples);
        forward_rows(&mut self.net, &layout_rows(InputLayout::Flat, &normed), None)
    }

    pub fn to_checkpoint(&self) -> ModelCheckpoint {
        ModelCheckpoint::from_parts(&self.spec, &self.net, self.seed, &self.normalizer, None, None)
    }

    pub fn from_checkpoint(ck: ModelCheckpoint) -> Result<Self> {
        if ck.model != ModelName::Autoencoder {
            return Err(Error::Format(format!("{} checkpoint is not an autoencoder", ck.model)));
        }
        let net = ck.network()?;
        Ok(Autoencoder {
            spec: ck.spec,
            net,
            normalizer: ck.normalizer,
            seed: ck.seed,
        })
    }
}

/// Train the autoencoder on normalized samples with MAE reconstruction.
pub fn train_autoencoder(
    train: &[SampleDescriptor],
    normalizer: &ChannelNormalizer,
    config: &TrainConfig,
) -> Result<(Autoencoder, History)> {
    let spec = build_model(ModelName::Autoencoder)?;
    let mut net = Network::new(&spec.input_shape, &spec.layers, seed::derive(config.seed, "autoencoder"))?;
    let order = canonical_order(train);
    let ordered: Vec<SampleDescriptor> = order.iter().map(|&i| train[i].clone()).collect();
    let rows = layout_rows(InputLayout::Flat, &ordered);
    let mut history = fit_network(&mut net, &rows, None, Objective::Reconstruction, config)?;
    history.class_counts = class_counts(train);
    Ok((
        Autoencoder {
            spec,
            net,
            normalizer: normalizer.clone(),
            seed: config.seed,
        },
        history,
    ))
}

pub struct Classifier {
    pub spec: ModelSpec,
    pub net: Network,
    pub normalizer: ChannelNormalizer,
    pub scaler: Option<FeatureScaler>,
    pub seed: u64,
    /// Frozen encoder feeding `mlp-enc`.
    pub encoder: Option<Autoencoder>,
}

fn prepare_rows(
    layout: InputLayout,
    normalized: &[SampleDescriptor],
    encoder: Option<&mut Autoencoder>,
) -> Result<Vec<Vec<f64>>> {
    match layout {
        InputLayout::Encoded => encoder
            .ok_or_else(|| Error::Config("mlp-enc needs a trained autoencoder".into()))?
            .encode_normalized(normalized),
        other => Ok(layout_rows(other, normalized)),
    }
}

impl Classifier {
    /// Network inputs for normalized samples.
    fn rows_for_normalized(&mut self, normalized: &[SampleDescriptor]) -> Result<Vec<Vec<f64>>> {
        let mut rows = prepare_rows(self.spec.name.input_layout(), normalized, self.encoder.as_mut())?;
        if let Some(sc) = &self.scaler {
            rows.iter_mut().for_each(|r| sc.apply(r));
        }
        Ok(rows)
    }

    /// Class probabilities for raw (unnormalized) samples.
    pub fn predict_scores(&mut self, samples: &[SampleDescriptor]) -> Result<Vec<[f64; 3]>> {
        let normed = self.normalizer.apply_all(samples);
        let rows = self.rows_for_normalized(&normed)?;
        let logits = forward_rows(&mut self.net, &rows, None)?;
        let mut out = Vec::with_capacity(logits.len());
        for l in logits {
            let t = Tensor::new(vec![1, 3], l)?;
            let p = ops::softmax(&t);
            out.push([p.data()[0], p.data()[1], p.data()[2]]);
        }
        Ok(out)
    }

    pub fn to_checkpoint(&self, encoder_file: Option<String>) -> ModelCheckpoint {
        ModelCheckpoint::from_parts(
            &self.spec,
            &self.net,
            self.seed,
            &self.normalizer,
            self.scaler.clone(),
            encoder_file,
        )
    }

    pub fn from_checkpoint(ck: ModelCheckpoint, encoder: Option<Autoencoder>) -> Result<Self> {
        if ck.model == ModelName::Autoencoder {
            return Err(Error::Format("autoencoder checkpoint is not a classifier".into()));
        }
        if ck.model == ModelName::MlpEnc && encoder.is_none() {
            return Err(Error::Config("mlp-enc checkpoint needs its autoencoder".into()));
        }
        let net = ck.network()?;
        Ok(Classifier {
            spec: ck.spec,
            net,
            normalizer: ck.normalizer,
            scaler: ck.feature_scaler,
            seed: ck.seed,
            encoder,
        })
    }
}

/// Train a classifier on normalized samples (SMOTE output included).
/// Validation samples are normalized too; `normalizer` is stored for
/// inference on raw samples.
pub fn train_classifier(
    name: ModelName,
    train: &[SampleDescriptor],
    val: &[SampleDescriptor],
    normalizer: &ChannelNormalizer,
    config: &TrainConfig,
    mut encoder: Option<Autoencoder>,
) -> Result<(Classifier, History)> {
    if name == ModelName::Autoencoder {
        return Err(Error::UnknownModel("autoencoder is not a classifier".into()));
    }
    let spec = build_model(name)?;
    let layout = name.input_layout();
    let order = canonical_order(train);
    let ordered: Vec<SampleDescriptor> = order.iter().map(|&i| train[i].clone()).collect();
    let labels: Vec<usize> = ordered.iter().map(|s| s.label.index()).collect();
    let val_labels: Vec<usize> = val.iter().map(|s| s.label.index()).collect();

    let mut rows = prepare_rows(layout, &ordered, encoder.as_mut())?;
    let mut val_rows = prepare_rows(layout, val, encoder.as_mut())?;
    let scaler = if layout.needs_scaler() {
        let sc = FeatureScaler::fit(&rows)?;
        rows.iter_mut().for_each(|r| sc.apply(r));
        val_rows.iter_mut().for_each(|r| sc.apply(r));
        Some(sc)
    } else {
        None
    };

    let mut net = Network::new(&spec.input_shape, &spec.layers, seed::derive(config.seed, name.as_str()))?;
    let mut history = fit_network(
        &mut net,
        &rows,
        Some((&val_rows, Objective::CrossEntropy(&val_labels))),
        Objective::CrossEntropy(&labels),
        config,
    )?;
    history.class_counts = class_counts(train);
    Ok((
        Classifier {
            spec,
            net,
            normalizer: normalizer.clone(),
            scaler,
            seed: config.seed,
            encoder,
        },
        history,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

/// Serialized network: header fields plus every parameter tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCheckpoint {
    pub format_version: u32,
    pub model: ModelName,
    pub spec: ModelSpec,
    pub seed: u64,
    pub normalizer: ChannelNormalizer,
    #[serde(default)]
    pub feature_scaler: Option<FeatureScaler>,
    /// File name of the autoencoder checkpoint an `mlp-enc` model reads.
    #[serde(default)]
    pub encoder: Option<String>,
    /// Free-form provenance, typically the effective run configuration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
    pub params: Vec<NamedTensor>,
}

impl ModelCheckpoint {
    fn from_parts(
        spec: &ModelSpec,
        net: &Network,
        seed: u64,
        normalizer: &ChannelNormalizer,
        feature_scaler: Option<FeatureScaler>,
        encoder: Option<String>,
    ) -> Self {
        ModelCheckpoint {
            format_version: CHECKPOINT_FORMAT_VERSION,
            model: spec.name,
            spec: spec.clone(),
            seed,
            normalizer: normalizer.clone(),
            feature_scaler,
            encoder,
            config: None,
            params: net
                .named_params()
                .into_iter()
                .map(|(name, t)| NamedTensor {
                    name,
                    shape: t.shape().to_vec(),
                    values: t.data().to_vec(),
                })
                .collect(),
        }
    }

    pub fn network(&self) -> Result<Network> {
        let params = self
            .params
            .iter()
            .map(|p| Tensor::new(p.shape.clone(), p.values.clone()))
            .collect::<Result<Vec<_>>>()?;
        Network::from_parts(&self.spec.input_shape, self.spec.layers.clone(), params)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: ModelCheckpoint = serde_json::from_str(text)?;
        if ck.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "checkpoint format {} not supported",
                ck.format_version
            )));
        }
        Ok(ck)
    }
}
