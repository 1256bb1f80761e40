//! Frame records, windowing into 10-second samples, participant splits and
//! channel normalization.

mod frame;
mod normalize;
mod split;
mod store;
mod window;

pub use frame::{parse_frames, write_frames, FrameRecord, FRAME_CSV_HEADER};
pub use normalize::{ChannelNormalizer, STD_FLOOR};
pub use split::{split_by_participant, DatasetSplit, Partition, SplitConfig};
pub use store::{read_samples, write_samples};
pub use window::{
    extract_windows, impute_untracked, resample_window, samples_from_frames, to_sample,
    FrameBlock, WindowConfig,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of per-frame descriptor channels.
pub const N_CHANNELS: usize = 18;
/// Time steps of a resampled sample.
pub const N_STEPS: usize = 100;
/// Values in one sample grid.
pub const GRID_LEN: usize = N_CHANNELS * N_STEPS;

/// Channel names in storage order: head pose, expressions, emotions.
pub const CHANNEL_NAMES: [&str; N_CHANNELS] = [
    "yaw",
    "pitch",
    "roll",
    "blink",
    "brow_furrow",
    "brow_raise",
    "cheek_raise",
    "eye_closure",
    "mouth_open",
    "nose_wrinkle",
    "smile",
    "upper_lip_raise",
    "yawn",
    "valence",
    "anger",
    "disgust",
    "joy",
    "surprise",
];

/// Inclusive value range of each channel on tracked frames.
pub const CHANNEL_RANGES: [(f64, f64); N_CHANNELS] = {
    let mut r = [(0.0, 100.0); N_CHANNELS];
    r[0] = (-90.0, 90.0);
    r[1] = (-90.0, 90.0);
    r[2] = (-90.0, 90.0);
    r[13] = (-100.0, 100.0);
    r
};

/// Index of a channel by name.
pub fn channel_index(name: &str) -> Option<usize> {
    CHANNEL_NAMES.iter().position(|n| *n == name)
}

/// Four-level annotation scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum RawLabel {
    Alert = 0,
    SlightlyDrowsy = 1,
    ModeratelyDrowsy = 2,
    ExtremelyDrowsy = 3,
}

impl RawLabel {
    pub const ALL: [RawLabel; 4] = [
        RawLabel::Alert,
        RawLabel::SlightlyDrowsy,
        RawLabel::ModeratelyDrowsy,
        RawLabel::ExtremelyDrowsy,
    ];

    pub fn from_index(v: u8) -> Option<Self> {
        Self::ALL.get(v as usize).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Moderate and Extreme fuse into one class.
    pub fn merge(self) -> MergedLabel {
        merge_label(self)
    }
}

/// Three-class training target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum MergedLabel {
    Alert = 0,
    Slight = 1,
    ModExt = 2,
}

impl MergedLabel {
    pub const ALL: [MergedLabel; 3] = [MergedLabel::Alert, MergedLabel::Slight, MergedLabel::ModExt];

    pub fn from_index(v: usize) -> Option<Self> {
        Self::ALL.get(v).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            MergedLabel::Alert => "alert",
            MergedLabel::Slight => "slight",
            MergedLabel::ModExt => "modext",
        }
    }
}

pub fn merge_label(raw: RawLabel) -> MergedLabel {
    match raw {
        RawLabel::Alert => MergedLabel::Alert,
        RawLabel::SlightlyDrowsy => MergedLabel::Slight,
        RawLabel::ModeratelyDrowsy | RawLabel::ExtremelyDrowsy => MergedLabel::ModExt,
    }
}

/// One 10-second window resampled to an 18 × 100 channel-major grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDescriptor {
    pub grid: Vec<f64>,
    pub label: MergedLabel,
    pub participant_id: String,
    pub video_id: String,
    pub start_frame: u64,
    /// Set on samples created by oversampling.
    #[serde(default)]
    pub synthetic: bool,
}

impl SampleDescriptor {
    pub fn new(
        grid: Vec<f64>,
        label: MergedLabel,
        participant_id: impl Into<String>,
        video_id: impl Into<String>,
        start_frame: u64,
    ) -> Result<Self> {
        let s = SampleDescriptor {
            grid,
            label,
            participant_id: participant_id.into(),
            video_id: video_id.into(),
            start_frame,
            synthetic: false,
        };
        s.validate()?;
        Ok(s)
    }

    /// Exactly 1800 finite values.
    pub fn validate(&self) -> Result<()> {
        if self.grid.len() != GRID_LEN {
            return Err(Error::Shape(format!(
                "sample grid has {} values, expected {GRID_LEN}",
                self.grid.len()
            )));
        }
        if let Some(i) = self.grid.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "sample {}/{}@{} cell {i}",
                self.participant_id, self.video_id, self.start_frame
            )));
        }
        Ok(())
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.grid[c * N_STEPS..(c + 1) * N_STEPS]
    }

    /// Sort and identity key: provenance plus the synthetic flag.
    pub fn key(&self) -> (&str, &str, u64, bool) {
        (&self.participant_id, &self.video_id, self.start_frame, self.synthetic)
    }
}

/// Count samples per merged class.
pub fn class_counts(samples: &[SampleDescriptor]) -> [usize; 3] {
    let mut c = [0; 3];
    for s in samples {
        c[s.label.index()] += 1;
    }
    c
}
