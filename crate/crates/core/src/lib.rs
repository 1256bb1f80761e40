//! Drowsiness-state classification from per-frame facial descriptors.
//!
//! The crate covers the whole path from frame-level descriptor files to
//! evaluated models:
//!
//! - [`dataset`]: frame CSV parsing, single-label windowing with
//!   class-specific strides, 18×100 resampling, participant-disjoint splits
//!   and channel normalization.
//! - [`features`]: the 108-D six-statistics summary of a sample.
//! - [`forest`]: a CART random forest with mean-decrease-impurity importances.
//! - [`neural`]: dense, convolution, LSTM, dropout and pooling layers with
//!   analytic gradients, plus Adam.
//! - [`models`]: the concrete MLP / autoencoder / Conv1D / Conv2D / LSTM
//!   architectures and their training loops.
//! - [`balance`]: SMOTE oversampling in descriptor space.
//! - [`eval`]: ROC-AUC, weighted metrics, class-specific threshold tuning.
//! - [`synth`]: a synthetic corpus generator with simulated annotators.
//! - [`pipeline`]: the `generate → prepare → train → tune → evaluate → report`
//!   commands driven by a JSON run configuration.

pub mod balance;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod forest;
pub mod models;
pub mod neural;
pub mod pipeline;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
