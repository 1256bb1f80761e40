//! Small neural-network toolkit: tensors, layers with hand-written
//! backward passes, losses and Adam. Everything is f64.

mod adam;
pub mod gradcheck;
pub mod ops;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use ops::Mode;
pub use tensor::Tensor;

use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Layer description. Shapes in comments exclude the batch axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    /// `[input] → [units]`
    Dense { input: usize, units: usize },
    LeakyRelu { slope: f64 },
    /// `[C_in, L] → [C_out, L_out]`
    Conv1d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
    },
    /// `[C_in, H, W] → [C_out, H_out, W_out]`
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: [usize; 2],
        stride: [usize; 2],
    },
    /// `[T, F] → [T, H]`
    Lstm { input: usize, hidden: usize },
    /// `[T, H] → [H]`, the last time step.
    LastStep,
    Dropout { rate: f64 },
    /// `[C, ...] → [C]`
    GlobalAvgPool,
    Softmax,
    /// `[...] → [product]`
    Flatten,
}

impl LayerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::LeakyRelu { .. } => "leaky_relu",
            LayerSpec::Conv1d { .. } => "conv1d",
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::Lstm { .. } => "lstm",
            LayerSpec::LastStep => "last_step",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::GlobalAvgPool => "global_avg_pool",
            LayerSpec::Softmax => "softmax",
            LayerSpec::Flatten => "flatten",
        }
    }

    fn mismatch(&self, input: &[usize]) -> Error {
        Error::Shape(format!("{} cannot take input {input:?}", self.name()))
    }

    /// Per-sample output shape for a per-sample input shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let positive = |v: &[usize]| v.iter().all(|&d| d > 0);
        match *self {
            LayerSpec::Dense { input: i, units } => {
                if input != [i] || i == 0 || units == 0 {
                    return Err(self.mismatch(input));
                }
                Ok(vec![units])
            }
            LayerSpec::LeakyRelu { slope } => {
                if !slope.is_finite() {
                    return Err(Error::Config("leaky slope must be finite".into()));
                }
                Ok(input.to_vec())
            }
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel,
                stride,
            } => {
                if input.len() != 2 || input[0] != in_channels || !positive(&[out_channels, kernel, stride]) {
                    return Err(self.mismatch(input));
                }
                Ok(vec![out_channels, ops::conv_output_len(input[1], kernel, stride)?])
            }
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
            } => {
                if input.len() != 3
                    || input[0] != in_channels
                    || !positive(&[out_channels, kernel[0], kernel[1], stride[0], stride[1]])
                {
                    return Err(self.mismatch(input));
                }
                Ok(vec![
                    out_channels,
                    ops::conv_output_len(input[1], kernel[0], stride[0])?,
                    ops::conv_output_len(input[2], kernel[1], stride[1])?,
                ])
            }
            LayerSpec::Lstm { input: f, hidden } => {
                if input.len() != 2 || input[1] != f || hidden == 0 {
                    return Err(self.mismatch(input));
                }
                Ok(vec![input[0], hidden])
            }
            LayerSpec::LastStep => {
                if input.len() != 2 {
                    return Err(self.mismatch(input));
                }
                Ok(vec![input[1]])
            }
            LayerSpec::Dropout { rate } => {
                if !(0.0..1.0).contains(&rate) {
                    return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
                }
                Ok(input.to_vec())
            }
            LayerSpec::GlobalAvgPool => {
                if input.len() < 2 {
                    return Err(self.mismatch(input));
                }
                Ok(vec![input[0]])
            }
            LayerSpec::Softmax => Ok(input.to_vec()),
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
        }
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            LayerSpec::Dense { .. } | LayerSpec::Conv1d { .. } | LayerSpec::Conv2d { .. } => {
                &["weight", "bias"]
            }
            LayerSpec::Lstm { .. } => &["w_input", "w_hidden", "bias"],
            _ => &[],
        }
    }

    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        match *self {
            LayerSpec::Dense { input, units } => vec![vec![input, units], vec![units]],
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => vec![vec![out_channels, in_channels, kernel], vec![out_channels]],
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => vec![
                vec![out_channels, in_channels, kernel[0], kernel[1]],
                vec![out_channels],
            ],
            LayerSpec::Lstm { input, hidden } => {
                vec![vec![input, 4 * hidden], vec![hidden, 4 * hidden], vec![4 * hidden]]
            }
            _ => Vec::new(),
        }
    }

    /// Glorot-uniform weights for dense and convolution layers, zero biases;
    /// LSTM weights uniform in ±1/√H with forget-gate bias 1.
    fn init_params<R: Rng>(&self, rng: &mut R) -> Vec<Tensor> {
        let glorot = |rng: &mut R, shape: &[usize], fan_in: usize, fan_out: usize| {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let d = Uniform::new_inclusive(-a, a);
            let data = (0..shape.iter().product()).map(|_| d.sample(rng)).collect();
            Tensor::new(shape.to_vec(), data).expect("shape from spec")
        };
        let shapes = self.param_shapes();
        match *self {
            LayerSpec::Dense { input, units } => {
                vec![glorot(rng, &shapes[0], input, units), Tensor::zeros(&shapes[1])]
            }
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => vec![
                glorot(rng, &shapes[0], in_channels * kernel, out_channels * kernel),
                Tensor::zeros(&shapes[1]),
            ],
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => {
                let k = kernel[0] * kernel[1];
                vec![
                    glorot(rng, &shapes[0], in_channels * k, out_channels * k),
                    Tensor::zeros(&shapes[1]),
                ]
            }
            LayerSpec::Lstm { hidden, .. } => {
                let a = 1.0 / (hidden as f64).sqrt();
                let d = Uniform::new_inclusive(-a, a);
                let mut uni = |shape: &[usize]| {
                    let data = (0..shape.iter().product()).map(|_| d.sample(rng)).collect();
                    Tensor::new(shape.to_vec(), data).expect("shape from spec")
                };
                let wx = uni(&shapes[0]);
                let wh = uni(&shapes[1]);
                let mut b = Tensor::zeros(&shapes[2]);
                b.data_mut()[hidden..2 * hidden].iter_mut().for_each(|v| *v = 1.0);
                vec![wx, wh, b]
            }
            _ => Vec::new(),
        }
    }
}

enum Cache {
    Empty,
    Input(Tensor),
    Conv1d { x_shape: Vec<usize>, cols: ops::Conv1dCols },
    Conv2d { x_shape: Vec<usize>, cols: ops::Conv2dCols },
    Lstm { x: Tensor, out: Tensor, cache: ops::LstmCache },
    Mask(Vec<f64>),
    Output(Tensor),
    Shape(Vec<usize>),
}

/// A layer with its parameters, last gradients and forward cache.
pub struct Layer {
    pub spec: LayerSpec,
    pub params: Vec<Tensor>,
    pub grads: Vec<Tensor>,
    cache: Cache,
    dropout_seed: u64,
    dropout_calls: u64,
}

impl Layer {
    pub fn new<R: Rng>(spec: LayerSpec, rng: &mut R) -> Self {
        let params = spec.init_params(rng);
        let grads = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        Layer {
            spec,
            params,
            grads,
            cache: Cache::Empty,
            dropout_seed: rng.gen(),
            dropout_calls: 0,
        }
    }

    pub fn with_params(spec: LayerSpec, params: Vec<Tensor>) -> Result<Self> {
        let shapes = spec.param_shapes();
        if shapes.len() != params.len()
            || shapes.iter().zip(&params).any(|(s, p)| s.as_slice() != p.shape())
        {
            return Err(Error::Shape(format!("parameters do not fit {}", spec.name())));
        }
        let grads = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        Ok(Layer {
            spec,
            params,
            grads,
            cache: Cache::Empty,
            dropout_seed: 0,
            dropout_calls: 0,
        })
    }

    pub fn forward(&mut self, x: Tensor, mode: Mode) -> Result<Tensor> {
        let batch = x.dim(0);
        let (y, cache) = match self.spec {
            LayerSpec::Dense { .. } => {
                let y = ops::dense(&x, &self.params[0], &self.params[1])?;
                (y, Cache::Input(x))
            }
            LayerSpec::LeakyRelu { slope } => (ops::leaky_relu(&x, slope), Cache::Input(x)),
            LayerSpec::Conv1d { stride, .. } => {
                let (y, cols) = ops::conv1d(&x, &self.params[0], &self.params[1], stride)?;
                (y, Cache::Conv1d { x_shape: x.shape().to_vec(), cols })
            }
            LayerSpec::Conv2d { stride, .. } => {
                let (y, cols) =
                    ops::conv2d(&x, &self.params[0], &self.params[1], (stride[0], stride[1]))?;
                (y, Cache::Conv2d { x_shape: x.shape().to_vec(), cols })
            }
            LayerSpec::Lstm { .. } => {
                let (y, cache) = ops::lstm(&x, &self.params[0], &self.params[1], &self.params[2])?;
                let out = y.clone();
                (y, Cache::Lstm { x, out, cache })
            }
            LayerSpec::LastStep => {
                x.expect_rank(3, "last_step input")?;
                let (steps, h) = (x.dim(1), x.dim(2));
                let data = x
                    .data()
                    .chunks(steps * h)
                    .flat_map(|c| c[(steps - 1) * h..].iter().copied())
                    .collect();
                (Tensor::new(vec![batch, h], data)?, Cache::Shape(x.shape().to_vec()))
            }
            LayerSpec::Dropout { rate } => {
                let seed = seed::derive_indexed(self.dropout_seed, "dropout", self.dropout_calls);
                if mode == Mode::Train {
                    self.dropout_calls += 1;
                }
                let (y, mask) = ops::dropout(&x, rate, mode, seed)?;
                (y, Cache::Mask(mask))
            }
            LayerSpec::GlobalAvgPool => {
                (ops::global_avg_pool(&x)?, Cache::Shape(x.shape().to_vec()))
            }
            LayerSpec::Softmax => {
                let y = ops::softmax(&x);
                (y.clone(), Cache::Output(y))
            }
            LayerSpec::Flatten => {
                let shape = x.shape().to_vec();
                let n = x.len() / batch;
                (x.reshape(&[batch, n])?, Cache::Shape(shape))
            }
        };
        self.cache = cache;
        Ok(y)
    }

    /// Gradient with respect to the last forward input; parameter gradients
    /// are stored in `grads`.
    pub fn backward(&mut self, gy: Tensor) -> Result<Tensor> {
        let missing = || Error::Contract("backward called before forward".into());
        match (&self.spec, &self.cache) {
            (LayerSpec::Dense { .. }, Cache::Input(x)) => {
                let (gx, gw, gb) = ops::dense_backward(x, &self.params[0], &gy);
                self.grads = vec![gw, gb];
                Ok(gx)
            }
            (LayerSpec::LeakyRelu { slope }, Cache::Input(x)) => {
                Ok(ops::leaky_relu_backward(x, &gy, *slope))
            }
            (LayerSpec::Conv1d { stride, .. }, Cache::Conv1d { x_shape, cols }) => {
                let (gx, gw, gb) = ops::conv1d_backward(x_shape, cols, &self.params[0], *stride, &gy);
                self.grads = vec![gw, gb];
                Ok(gx)
            }
            (LayerSpec::Conv2d { stride, .. }, Cache::Conv2d { x_shape, cols }) => {
                let (gx, gw, gb) = ops::conv2d_backward(
                    x_shape,
                    cols,
                    &self.params[0],
                    (stride[0], stride[1]),
                    &gy,
                );
                self.grads = vec![gw, gb];
                Ok(gx)
            }
            (LayerSpec::Lstm { .. }, Cache::Lstm { x, out, cache }) => {
                let (gx, gwx, gwh, gb) =
                    ops::lstm_backward(x, out, cache, &self.params[0], &self.params[1], &gy);
                self.grads = vec![gwx, gwh, gb];
                Ok(gx)
            }
            (LayerSpec::LastStep, Cache::Shape(shape)) => {
                let (steps, h) = (shape[1], shape[2]);
                let mut gx = Tensor::zeros(shape);
                for (chunk, g) in gx.data_mut().chunks_mut(steps * h).zip(gy.data().chunks(h)) {
                    chunk[(steps - 1) * h..].copy_from_slice(g);
                }
                Ok(gx)
            }
            (LayerSpec::Dropout { .. }, Cache::Mask(mask)) => Ok(ops::dropout_backward(mask, &gy)),
            (LayerSpec::GlobalAvgPool, Cache::Shape(shape)) => {
                Ok(ops::global_avg_pool_backward(shape, &gy))
            }
            (LayerSpec::Softmax, Cache::Output(p)) => Ok(ops::softmax_backward(p, &gy)),
            (LayerSpec::Flatten, Cache::Shape(shape)) => gy.reshape(shape),
            _ => Err(missing()),
        }
    }
}

/// A stack of layers applied in order.
pub struct Network {
    pub input_shape: Vec<usize>,
    pub layers: Vec<Layer>,
}

impl Network {
    /// Check that the layer shapes chain from `input_shape`; returns the
    /// per-sample output shape.
    pub fn check_chain(input_shape: &[usize], specs: &[LayerSpec]) -> Result<Vec<usize>> {
        let mut shape = input_shape.to_vec();
        for (i, s) in specs.iter().enumerate() {
            shape = s
                .output_shape(&shape)
                .map_err(|e| Error::Shape(format!("layer {i}: {e}")))?;
        }
        Ok(shape)
    }

    pub fn new(input_shape: &[usize], specs: &[LayerSpec], seed: u64) -> Result<Self> {
        Self::check_chain(input_shape, specs)?;
        let mut rng = seed::rng_for(seed, "init");
        Ok(Network {
            input_shape: input_shape.to_vec(),
            layers: specs.iter().cloned().map(|s| Layer::new(s, &mut rng)).collect(),
        })
    }

    pub fn output_shape(&self) -> Vec<usize> {
        let specs: Vec<LayerSpec> = self.layers.iter().map(|l| l.spec.clone()).collect();
        Self::check_chain(&self.input_shape, &specs).expect("validated at construction")
    }

    pub fn forward(&mut self, x: Tensor, mode: Mode) -> Result<Tensor> {
        if x.shape().get(1..) != Some(self.input_shape.as_slice()) {
            return Err(Error::Shape(format!(
                "network expects [batch, {:?}], got {:?}",
                self.input_shape,
                x.shape()
            )));
        }
        self.layers.iter_mut().try_fold(x, |h, l| l.forward(h, mode))
    }

    pub fn backward(&mut self, gy: Tensor) -> Result<Tensor> {
        self.layers.iter_mut().rev().try_fold(gy, |g, l| l.backward(g))
    }

    /// `(name, parameter, gradient)` triples in layer order.
    pub fn params_and_grads(&mut self) -> Vec<(String, &mut Tensor, &Tensor)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter_mut().enumerate() {
            let names = layer.spec.param_names();
            for ((p, g), n) in layer.params.iter_mut().zip(layer.grads.iter()).zip(names) {
                out.push((format!("{i}.{}.{n}", layer.spec.name()), p, g));
            }
        }
        out
    }

    /// `(name, parameter)` pairs in layer order.
    pub fn named_params(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            for (p, n) in layer.params.iter().zip(layer.spec.param_names()) {
                out.push((format!("{i}.{}.{n}", layer.spec.name()), p));
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().flat_map(|l| &l.params).map(|p| p.len()).sum()
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec.clone()).collect()
    }

    /// Rebuild a network from specs and stored parameters.
    pub fn from_parts(input_shape: &[usize], specs: Vec<LayerSpec>, mut params: Vec<Tensor>) -> Result<Self> {
        Self::check_chain(input_shape, &specs)?;
        let mut layers = Vec::with_capacity(specs.len());
        params.reverse();
        for spec in specs {
            let n = spec.param_shapes().len();
            let mut own = Vec::with_capacity(n);
            for _ in 0..n {
                own.push(params.pop().ok_or_else(|| Error::Format("too few parameter tensors".into()))?);
            }
            layers.push(Layer::with_params(spec, own)?);
        }
        if !params.is_empty() {
            return Err(Error::Format("too many parameter tensors".into()));
        }
        Ok(Network {
            input_shape: input_shape.to_vec(),
            layers,
        })
    }
}

pub fn adam_step(net: &mut Network, state: &mut AdamState) -> Result<()> {
    let mut items = net.params_and_grads();
    let mut refs: Vec<(&str, &mut Tensor, &Tensor)> =
        items.iter_mut().map(|(n, p, g)| (n.as_str(), &mut **p, &**g)).collect();
    state.step(&mut refs)
}
