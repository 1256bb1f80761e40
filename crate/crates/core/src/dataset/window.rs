use serde::{Deserialize, Serialize};

use super::{merge_label, FrameRecord, MergedLabel, SampleDescriptor, N_CHANNELS, N_STEPS};
use crate::error::{Error, Result};

/// Windowing parameters. Frame counts assume 30 fps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowConfig {
    pub window_frames: usize,
    pub stride_alert: usize,
    pub stride_drowsy: usize,
    /// Windows with a larger untracked share are dropped.
    pub max_untracked_fraction: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            window_frames: 300,
            stride_alert: 75,
            stride_drowsy: 5,
            max_untracked_fraction: 0.2,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_frames == 0 || self.stride_alert == 0 || self.stride_drowsy == 0 {
            return Err(Error::Config("window length and strides must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.max_untracked_fraction) {
            return Err(Error::Config("max_untracked_fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn stride(&self, label: MergedLabel) -> usize {
        match label {
            MergedLabel::Alert => self.stride_alert,
            MergedLabel::Slight | MergedLabel::ModExt => self.stride_drowsy,
        }
    }
}

/// A run of consecutive frames from one video that share one merged label.
#[derive(Debug, Clone, Copy)]
pub struct FrameBlock<'a> {
    pub frames: &'a [FrameRecord],
    pub label: MergedLabel,
}

impl FrameBlock<'_> {
    pub fn start_frame(&self) -> u64 {
        self.frames[0].frame_index
    }
}

fn same_video(a: &FrameRecord, b: &FrameRecord) -> bool {
    a.participant_id == b.participant_id && a.video_id == b.video_id
}

/// Cut single-label windows out of a frame stream.
///
/// Frames are grouped into maximal runs that stay within one video, have
/// consecutive frame indices, carry a consensus label and keep one merged
/// label. Inside each run, windows start at the run start and advance by the
/// stride of the run's label. Runs shorter than one window yield nothing, so
/// a window never spans a label transition or a no-consensus frame.
pub fn extract_windows<'a>(
    frames: &'a [FrameRecord],
    config: &WindowConfig,
) -> Result<Vec<FrameBlock<'a>>> {
    config.validate()?;
    let w = config.window_frames;
    let mut out = Vec::new();
    let mut i = 0;
    while i < frames.len() {
        let Some(label) = frames[i].usable_label().map(merge_label) else {
            i += 1;
            continue;
        };
        let mut j = i + 1;
        while j < frames.len()
            && same_video(&frames[j - 1], &frames[j])
            && frames[j].frame_index == frames[j - 1].frame_index + 1
            && frames[j].usable_label().map(merge_label) == Some(label)
        {
            j += 1;
        }
        let run = &frames[i..j];
        let stride = config.stride(label);
        let mut start = 0;
        while start + w <= run.len() {
            let block = &run[start..start + w];
            let untracked = block.iter().filter(|f| !f.tracked).count();
            if (untracked as f64) <= config.max_untracked_fraction * w as f64 {
                out.push(FrameBlock { frames: block, label });
            }
            start += stride;
        }
        i = j;
    }
    Ok(out)
}

/// Fill untracked frames from the previous tracked frame, then fill any
/// leading gap from the first tracked frame. Returns one row per frame.
pub fn impute_untracked(frames: &[FrameRecord]) -> Vec<[f64; N_CHANNELS]> {
    let mut rows: Vec<[f64; N_CHANNELS]> = frames.iter().map(|f| f.channels).collect();
    let mut last: Option<[f64; N_CHANNELS]> = None;
    for (row, f) in rows.iter_mut().zip(frames) {
        if f.tracked {
            last = Some(*row);
        } else if let Some(prev) = last {
            *row = prev;
        }
    }
    if let Some(first) = frames.iter().position(|f| f.tracked) {
        let fill = rows[first];
        for row in rows.iter_mut().take(first) {
            *row = fill;
        }
    }
    rows
}

/// Linearly resample a T × 18 block to an 18 × `target_len` channel-major
/// grid, sampling at positions `i·(T−1)/(target_len−1)`.
pub fn resample_window(block: &[[f64; N_CHANNELS]], target_len: usize) -> Result<Vec<f64>> {
    let t = block.len();
    if t < 2 {
        return Err(Error::DegenerateWindow(t));
    }
    if target_len < 2 {
        return Err(Error::Config(format!("target length {target_len} < 2")));
    }
    let mut out = vec![0.0; N_CHANNELS * target_len];
    let span = (t - 1) as f64;
    let denom = (target_len - 1) as f64;
    for i in 0..target_len {
        let pos = i as f64 * span / denom;
        let lo = pos.floor() as usize;
        for c in 0..N_CHANNELS {
            let v = if lo >= t - 1 {
                block[t - 1][c]
            } else {
                let a = block[lo][c];
                let b = block[lo + 1][c];
                let frac = pos - lo as f64;
                if frac == 0.0 {
                    a
                } else {
                    (a + frac * (b - a)).clamp(a.min(b), a.max(b))
                }
            };
            out[c * target_len + i] = v;
        }
    }
    Ok(out)
}

/// Impute and resample one block into a sample.
pub fn to_sample(block: &FrameBlock<'_>) -> Result<SampleDescriptor> {
    let rows = impute_untracked(block.frames);
    let grid = resample_window(&rows, N_STEPS)?;
    let first = &block.frames[0];
    SampleDescriptor::new(
        grid,
        block.label,
        first.participant_id.clone(),
        first.video_id.clone(),
        first.frame_index,
    )
}

/// Window, impute and resample a frame stream in one go.
pub fn samples_from_frames(
    frames: &[FrameRecord],
    config: &WindowConfig,
) -> Result<Vec<SampleDescriptor>> {
    extract_windows(frames, config)?.iter().map(to_sample).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::RawLabel;
    use proptest::prelude::*;

    fn frames(labels: &[RawLabel]) -> Vec<FrameRecord> {
        labels
            .iter()
            .enumerate()
            .map(|(i, &l)| FrameRecord {
                participant_id: "p".into(),
                video_id: "v".into(),
                frame_index: i as u64,
                channels: [i as f64; N_CHANNELS],
                raw_label: Some(l),
                consensus: true,
                tracked: true,
            })
            .collect()
    }

    fn starts(blocks: &[FrameBlock<'_>]) -> Vec<u64> {
        blocks.iter().map(|b| b.start_frame()).collect()
    }

    #[test]
    fn alert_stride_counts() {
        let f = frames(&[RawLabel::Alert; 900]);
        let w = extract_windows(&f, &WindowConfig::default()).unwrap();
        // (900 - 300) / 75 + 1
        assert_eq!(w.len(), 9);
        assert_eq!(starts(&w), (0..9).map(|k| k * 75).collect::<Vec<_>>());
        assert!(w.iter().all(|b| b.frames.len() == 300));
    }

    #[test]
    fn drowsy_stride_counts() {
        let f = frames(&[RawLabel::SlightlyDrowsy; 310]);
        let w = extract_windows(&f, &WindowConfig::default()).unwrap();
        assert_eq!(starts(&w), vec![0, 5, 10]);
        assert!(w.iter().all(|b| b.label == MergedLabel::Slight));
    }

    #[test]
    fn transition_inside_window_is_skipped() {
        let mut labels = vec![RawLabel::Alert; 150];
        labels.extend(vec![RawLabel::SlightlyDrowsy; 150]);
        let f = frames(&labels);
        let w = extract_windows(&f, &WindowConfig::default()).unwrap();
        assert!(w.is_empty());
    }

    #[test]
    fn moderate_to_extreme_is_not_a_merged_transition() {
        let mut labels = vec![RawLabel::ModeratelyDrowsy; 150];
        labels.extend(vec![RawLabel::ExtremelyDrowsy; 150]);
        let f = frames(&labels);
        let w = extract_windows(&f, &WindowConfig::default()).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].label, MergedLabel::ModExt);
    }

    #[test]
    fn no_consensus_frame_breaks_runs() {
        let mut f = frames(&[RawLabel::Alert; 600]);
        f[300].consensus = false;
        f[300].raw_label = None;
        let w = extract_windows(&f, &WindowConfig::default()).unwrap();
        assert_eq!(starts(&w), vec![0]);
    }

    #[test]
    fn untracked_share_threshold() {
        let mut f = frames(&[RawLabel::Alert; 300]);
        for fr in f.iter_mut().take(60) {
            fr.tracked = false;
        }
        assert_eq!(extract_windows(&f, &WindowConfig::default()).unwrap().len(), 1);
        f[60].tracked = false;
        assert!(extract_windows(&f, &WindowConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn videos_never_share_a_window() {
        let mut f = frames(&[RawLabel::Alert; 400]);
        for fr in f.iter_mut().skip(200) {
            fr.video_id = "other".into();
        }
        assert!(extract_windows(&f, &WindowConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn empty_input_gives_no_windows() {
        assert!(extract_windows(&[], &WindowConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn imputation_forward_then_backward() {
        let mut f = frames(&[RawLabel::Alert; 5]);
        for i in [0, 1, 3] {
            f[i].tracked = false;
            f[i].channels = [0.0; N_CHANNELS];
        }
        let rows = impute_untracked(&f);
        let col: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        assert_eq!(col, vec![2.0, 2.0, 2.0, 2.0, 4.0]);
    }

    #[test]
    fn resample_constant() {
        let block = vec![[3.25; N_CHANNELS]; 300];
        let out = resample_window(&block, 100).unwrap();
        assert!(out.iter().all(|&v| v == 3.25));
    }

    #[test]
    fn resample_identity_at_target_length() {
        let block: Vec<[f64; N_CHANNELS]> = (0..100)
            .map(|t| std::array::from_fn(|c| (t * 31 + c * 7) as f64 * 0.1))
            .collect();
        let out = resample_window(&block, 100).unwrap();
        for t in 0..100 {
            for c in 0..N_CHANNELS {
                assert_eq!(out[c * 100 + t], block[t][c]);
            }
        }
    }

    #[test]
    fn resample_ramp_closed_form() {
        let block: Vec<[f64; N_CHANNELS]> = (0..300).map(|t| [t as f64; N_CHANNELS]).collect();
        let out = resample_window(&block, 100).unwrap();
        for i in 0..100 {
            let expected = i as f64 * 299.0 / 99.0;
            assert!((out[i] - expected).abs() < 1e-12, "{i}: {}", out[i]);
        }
        assert_eq!(out[0], 0.0);
        assert_eq!(out[99], 299.0);
    }

    #[test]
    fn resample_rejects_single_frame() {
        assert!(matches!(
            resample_window(&[[0.0; N_CHANNELS]], 100),
            Err(Error::DegenerateWindow(1))
        ));
    }

    fn block_strategy() -> impl Strategy<Value = Vec<[f64; N_CHANNELS]>> {
        prop::collection::vec(prop::array::uniform18(-100.0f64..100.0), 2..400)
    }

    proptest! {
        #[test]
        fn resample_stays_within_channel_bounds(block in block_strategy()) {
            let out = resample_window(&block, 100).unwrap();
            for c in 0..N_CHANNELS {
                let lo = block.iter().map(|r| r[c]).fold(f64::INFINITY, f64::min);
                let hi = block.iter().map(|r| r[c]).fold(f64::NEG_INFINITY, f64::max);
                for &v in &out[c * 100..(c + 1) * 100] {
                    prop_assert!(v >= lo && v <= hi);
                }
                prop_assert_eq!(out[c * 100], block[0][c]);
                prop_assert_eq!(out[c * 100 + 99], block[block.len() - 1][c]);
            }
        }

        #[test]
        fn resample_commutes_with_time_reversal(block in block_strategy()) {
            let fwd = resample_window(&block, 100).unwrap();
            let rev_block: Vec<_> = block.iter().rev().copied().collect();
            let rev = resample_window(&rev_block, 100).unwrap();
            for c in 0..N_CHANNELS {
                for i in 0..100 {
                    let a = fwd[c * 100 + (99 - i)];
                    let b = rev[c * 100 + i];
                    prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{} vs {}", a, b);
                }
            }
        }
    }
}
