//! Six-statistics summary of a sample: per channel mean, max, min,
//! population standard deviation, skewness and excess kurtosis, giving a
//! 108-D vector laid out channel-major.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::{MergedLabel, SampleDescriptor, CHANNEL_NAMES, N_CHANNELS};
use crate::error::{Error, Result};

pub const N_STATS: usize = 6;
pub const N_FEATURES: usize = N_CHANNELS * N_STATS;
pub const STAT_NAMES: [&str; N_STATS] = ["mean", "max", "min", "std", "skew", "kurt"];

/// Below this second central moment skewness and kurtosis are reported as 0.
const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector108 {
    pub values: Vec<f64>,
    pub label: MergedLabel,
    pub participant_id: String,
    pub video_id: String,
    pub start_frame: u64,
}

/// `<channel>_<stat>` for every slot of the feature vector.
pub fn feature_names() -> Vec<String> {
    CHANNEL_NAMES
        .iter()
        .flat_map(|c| STAT_NAMES.iter().map(move |s| format!("{c}_{s}")))
        .collect()
}

/// Channel that owns feature slot `index`.
pub fn feature_channel(index: usize) -> usize {
    index / N_STATS
}

pub fn channel_statistics(series: &[f64]) -> Result<[f64; N_STATS]> {
    if series.len() < 2 {
        return Err(Error::Shape(format!(
            "statistics need at least 2 values, got {}",
            series.len()
        )));
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in series {
        max = max.max(x);
        min = min.min(x);
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let (skew, kurt) = if m2 < VARIANCE_FLOOR {
        (0.0, 0.0)
    } else {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    };
    // The rounded mean of a near-constant series can land a hair outside [min, max].
    let mean = mean.clamp(min, max);
    Ok([mean, max, min, m2.sqrt(), skew, kurt])
}

pub fn featurize_sample(sample: &SampleDescriptor) -> FeatureVector108 {
    let mut values = Vec::with_capacity(N_FEATURES);
    for c in 0..N_CHANNELS {
        // A valid sample always has 100 steps per channel.
        values.extend(channel_statistics(sample.channel(c)).expect("100-step channel"));
    }
    FeatureVector108 {
        values,
        label: sample.label,
        participant_id: sample.participant_id.clone(),
        video_id: sample.video_id.clone(),
        start_frame: sample.start_frame,
    }
}

pub fn featurize_all(samples: &[SampleDescriptor]) -> Vec<FeatureVector108> {
    samples.iter().map(featurize_sample).collect()
}

/// CSV dump: ids, label, synthetic flag and the 108 named columns.
pub fn write_feature_csv<W: Write>(
    mut w: W,
    samples: &[SampleDescriptor],
) -> std::io::Result<()> {
    write!(w, "participant_id,video_id,start_frame,label,synthetic")?;
    for name in feature_names() {
        write!(w, ",{name}")?;
    }
    writeln!(w)?;
    for s in samples {
        let f = featurize_sample(s);
        write!(
            w,
            "{},{},{},{},{}",
            f.participant_id,
            f.video_id,
            f.start_frame,
            f.label.index(),
            u8::from(s.synthetic)
        )?;
        for v in &f.values {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}
