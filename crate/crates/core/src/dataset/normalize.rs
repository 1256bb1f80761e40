use serde::{Deserialize, Serialize};

use super::{SampleDescriptor, N_CHANNELS, N_STEPS};
use crate::error::{Error, Result};

pub const STD_FLOOR: f64 = 1e-8;

/// Per-channel z-score fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelNormalizer {
    pub mean: [f64; N_CHANNELS],
    pub std: [f64; N_CHANNELS],
}

impl ChannelNormalizer {
    pub fn identity() -> Self {
        ChannelNormalizer {
            mean: [0.0; N_CHANNELS],
            std: [1.0; N_CHANNELS],
        }
    }

    pub fn fit(train: &[SampleDescriptor]) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyInput("normalizer needs training samples".into()));
        }
        let n = (train.len() * N_STEPS) as f64;
        let mut mean = [0.0; N_CHANNELS];
        let mut std = [0.0; N_CHANNELS];
        for c in 0..N_CHANNELS {
            let sum: f64 = train.iter().flat_map(|s| s.channel(c)).sum();
            mean[c] = sum / n;
            let ss: f64 = train
                .iter()
                .flat_map(|s| s.channel(c))
                .map(|v| (v - mean[c]).powi(2))
                .sum();
            std[c] = (ss / n).sqrt().max(STD_FLOOR);
        }
        Ok(ChannelNormalizer { mean, std })
    }

    pub fn apply(&self, sample: &SampleDescriptor) -> SampleDescriptor {
        let mut out = sample.clone();
        self.apply_in_place(&mut out);
        out
    }

    pub fn apply_in_place(&self, sample: &mut SampleDescriptor) {
        for (c, chunk) in sample.grid.chunks_mut(N_STEPS).enumerate() {
            let (m, s) = (self.mean[c], self.std[c].max(STD_FLOOR));
            for v in chunk {
                *v = (*v - m) / s;
            }
        }
    }

    pub fn apply_all(&self, samples: &[SampleDescriptor]) -> Vec<SampleDescriptor> {
        samples.iter().map(|s| self.apply(s)).collect()
    }
}
