//! Synthetic frame streams: a semi-Markov drowsiness process, per-state
//! facial signatures rendered into the 18 channels, and three noisy
//! annotators reduced by majority vote.
//!
//! This is a test fixture with planted, tunable class signal. It makes no
//! claim of realism.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{
    channel_index, parse_frames, samples_from_frames, write_frames, FrameRecord, RawLabel, SampleDescriptor, WindowConfig,
    CHANNEL_RANGES, N_CHANNELS,
};
use crate::error::{Error, Result};
use crate::seed;

const DWELL_SHAPE: f64 = 3.0;
/// Shortest window any state must be able to fill, in seconds.
const WINDOW_SECONDS: f64 = 10.0;
const LAG_SECONDS: f64 = 2.0;

/// Per-state dwell and behavioural parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StateSignature {
    pub dwell_mean_s: f64,
    /// Probability that leaving this state moves one level more severe.
    pub escalate_prob: f64,
    pub blink_rate_per_min: f64,
    pub blink_frames: f64,
    pub eye_closure_base: f64,
    /// Stationary s.d. of the slow eye-closure wander.
    pub eye_closure_drift: f64,
    pub yawn_rate_per_min: f64,
    pub nod_amplitude_deg: f64,
    pub nod_rate_hz: f64,
    pub head_droop_deg: f64,
    /// Eye-closure plateaus that end in an upright head jerk.
    pub jerk_rate_per_min: f64,
    pub smile_rate_per_min: f64,
}

impl Default for StateSignature {
    fn default() -> Self {
        default_signatures()[0].clone()
    }
}

pub fn default_signatures() -> [StateSignature; 4] {
    let alert = StateSignature {
        dwell_mean_s: 90.0,
        escalate_prob: 1.0,
        blink_rate_per_min: 14.0,
        blink_frames: 4.0,
        eye_closure_base: 10.0,
        eye_closure_drift: 4.0,
        yawn_rate_per_min: 0.2,
        nod_amplitude_deg: 0.5,
        nod_rate_hz: 0.15,
        head_droop_deg: 0.0,
        jerk_rate_per_min: 0.0,
        smile_rate_per_min: 2.0,
    };
    let slight = StateSignature {
        dwell_mean_s: 10.0,
        escalate_prob: 0.4,
        blink_rate_per_min: 22.0,
        blink_frames: 7.0,
        eye_closure_base: 22.0,
        eye_closure_drift: 5.0,
        yawn_rate_per_min: 1.0,
        nod_amplitude_deg: 1.5,
        nod_rate_hz: 0.2,
        head_droop_deg: 2.0,
        jerk_rate_per_min: 0.0,
        smile_rate_per_min: 1.0,
    };
    let moderate = StateSignature {
        dwell_mean_s: 10.0,
        escalate_prob: 0.35,
        blink_rate_per_min: 26.0,
        blink_frames: 11.0,
        eye_closure_base: 36.0,
        eye_closure_drift: 7.0,
        yawn_rate_per_min: 1.6,
        nod_amplitude_deg: 3.5,
        nod_rate_hz: 0.25,
        head_droop_deg: 5.0,
        jerk_rate_per_min: 0.5,
        smile_rate_per_min: 0.4,
    };
    let extreme = StateSignature {
        dwell_mean_s: 8.0,
        escalate_prob: 0.0,
        blink_rate_per_min: 28.0,
        blink_frames: 15.0,
        eye_closure_base: 48.0,
        eye_closure_drift: 8.0,
        yawn_rate_per_min: 1.4,
        nod_amplitude_deg: 5.0,
        nod_rate_hz: 0.3,
        head_droop_deg: 8.0,
        jerk_rate_per_min: 3.0,
        smile_rate_per_min: 0.2,
    };
    [alert, slight, moderate, extreme]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnotatorNoise {
    pub boundary_sigma_frames: f64,
    pub mislabel_prob: f64,
}

impl Default for AnnotatorNoise {
    fn default() -> Self {
        AnnotatorNoise {
            boundary_sigma_frames: 15.0,
            mislabel_prob: 0.05,
        }
    }
}

/// Between-participant spread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParticipantVariation {
    /// Camera placement offsets on yaw, pitch and roll.
    pub pose_offset_sd_deg: f64,
    pub eye_closure_offset_sd: f64,
    /// S.d. of the log multiplier applied to every event rate.
    pub rate_log_sd: f64,
    /// Expression resting levels are drawn from `[0, max]`.
    pub expression_baseline_max: f64,
}

impl Default for ParticipantVariation {
    fn default() -> Self {
        ParticipantVariation {
            pose_offset_sd_deg: 6.0,
            eye_closure_offset_sd: 6.0,
            rate_log_sd: 0.25,
            expression_baseline_max: 8.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub n_participants: usize,
    pub videos_per_participant: usize,
    pub video_frames: u64,
    pub fps: f64,
    pub initial_state: RawLabel,
    pub states: [StateSignature; 4],
    pub annotators: AnnotatorNoise,
    pub variation: ParticipantVariation,
    /// Scales white measurement noise and every slow drift; 0 disables both.
    pub noise_scale: f64,
    pub dropout_rate_per_min: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_participants: 70,
            videos_per_participant: 1,
            video_frames: 4500,
            fps: 30.0,
            initial_state: RawLabel::Alert,
            states: default_signatures(),
            annotators: AnnotatorNoise::default(),
            variation: ParticipantVariation::default(),
            noise_scale: 1.0,
            dropout_rate_per_min: 0.3,
            seed: 42,
        }
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v.is_nan() || v < 0.0 {
        return Err(Error::Config(format!("{name} must be non-negative, got {v}")));
    }
    Ok(())
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_participants == 0 || self.videos_per_participant == 0 || self.video_frames == 0 {
            return Err(Error::Config("participants, videos and frames must be positive".into()));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::Config(format!("fps must be positive, got {}", self.fps)));
        }
        for (s, sig) in RawLabel::ALL.iter().zip(&self.states) {
            let tag = |f: &str| format!("states[{}].{f}", s.index());
            if sig.dwell_mean_s.is_nan() || sig.dwell_mean_s <= 0.0 {
                return Err(Error::Config(format!("{} must be positive", tag("dwell_mean_s"))));
            }
            if !(0.0..=1.0).contains(&sig.escalate_prob) {
                return Err(Error::Config(format!("{} must lie in [0, 1]", tag("escalate_prob"))));
            }
            for (name, v) in [
                ("blink_rate_per_min", sig.blink_rate_per_min),
                ("blink_frames", sig.blink_frames),
                ("eye_closure_drift", sig.eye_closure_drift),
                ("yawn_rate_per_min", sig.yawn_rate_per_min),
                ("nod_amplitude_deg", sig.nod_amplitude_deg),
                ("nod_rate_hz", sig.nod_rate_hz),
                ("jerk_rate_per_min", sig.jerk_rate_per_min),
                ("smile_rate_per_min", sig.smile_rate_per_min),
            ] {
                non_negative(&tag(name), v)?;
            }
        }
        if !self.states.iter().any(|s| s.dwell_mean_s > WINDOW_SECONDS) {
            return Err(Error::Config("at least one dwell mean must exceed the 10 s window".into()));
        }
        non_negative("annotators.boundary_sigma_frames", self.annotators.boundary_sigma_frames)?;
        let p = self.annotators.mislabel_prob;
        if !(0.0..0.5).contains(&p) {
            return Err(Error::Config(format!("mislabel_prob must lie in [0, 0.5), got {p}")));
        }
        let v = &self.variation;
        for (name, x) in [
            ("variation.pose_offset_sd_deg", v.pose_offset_sd_deg),
            ("variation.eye_closure_offset_sd", v.eye_closure_offset_sd),
            ("variation.rate_log_sd", v.rate_log_sd),
            ("variation.expression_baseline_max", v.expression_baseline_max),
            ("noise_scale", self.noise_scale),
            ("dropout_rate_per_min", self.dropout_rate_per_min),
        ] {
            non_negative(name, x)?;
        }
        Ok(())
    }

    fn signature(&self, s: RawLabel) -> &StateSignature {
        &self.states[s.index()]
    }
}

/// A ground-truth run `[start_frame, end_frame)` of one state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthSegment {
    pub state: RawLabel,
    pub start_frame: u64,
    pub end_frame: u64,
}

fn step_up(s: RawLabel) -> RawLabel {
    RawLabel::ALL[(s.index() + 1).min(3)]
}

fn step_down(s: RawLabel) -> RawLabel {
    RawLabel::ALL[s.index().saturating_sub(1)]
}

/// Semi-Markov walk over the four levels, moving one level at a time, with
/// gamma dwell times around the configured means.
pub fn simulate_states(config: &GeneratorConfig, seed: u64) -> Result<Vec<GroundTruthSegment>> {
    config.validate()?;
    let mut rng = seed::rng(seed);
    let total = config.video_frames;
    let mut segments = Vec::new();
    let mut state = config.initial_state;
    let mut t = 0u64;
    while t < total {
        let remaining = (total - t) as f64;
        let mean = config.signature(state).dwell_mean_s * config.fps;
        let dwell = if mean.is_finite() && mean < remaining * 1e6 {
            let g = Gamma::new(DWELL_SHAPE, mean / DWELL_SHAPE)
                .map_err(|e| Error::Config(format!("dwell distribution: {e}")))?;
            g.sample(&mut rng).round().clamp(1.0, remaining)
        } else {
            remaining
        };
        let end = t + dwell as u64;
        segments.push(GroundTruthSegment {
            state,
            start_frame: t,
            end_frame: end,
        });
        t = end;
        state = match state {
            RawLabel::Alert => RawLabel::SlightlyDrowsy,
            RawLabel::ExtremelyDrowsy => RawLabel::ModeratelyDrowsy,
            s if rng.gen_bool(config.signature(s).escalate_prob) => step_up(s),
            s => step_down(s),
        };
    }
    Ok(segments)
}

/// Per-participant constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantProfile {
    pub participant_id: String,
    pub pose_offset: [f64; 3],
    pub eye_closure_offset: f64,
    pub rate_scale: f64,
    /// Resting level of every channel; pose entries equal `pose_offset`.
    pub baseline: [f64; N_CHANNELS],
}

impl ParticipantProfile {
    pub fn sample(participant_id: impl Into<String>, variation: &ParticipantVariation, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let mut baseline = [0.0; N_CHANNELS];
        let mut pose_offset = [0.0; 3];
        for (c, slot) in pose_offset.iter_mut().enumerate() {
            *slot = gauss(&mut rng) * variation.pose_offset_sd_deg;
            baseline[c] = *slot;
        }
        for b in baseline.iter_mut().skip(3) {
            *b = rng.gen::<f64>() * variation.expression_baseline_max;
        }
        baseline[ch("valence")] = 0.0;
        baseline[ch("blink")] = 0.0;
        ParticipantProfile {
            participant_id: participant_id.into(),
            pose_offset,
            eye_closure_offset: gauss(&mut rng) * variation.eye_closure_offset_sd,
            rate_scale: (gauss(&mut rng) * variation.rate_log_sd).exp(),
            baseline,
        }
    }
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").sample(rng)
}

fn ch(name: &str) -> usize {
    channel_index(name).expect("known channel")
}

/// Slow mean-reverting wander with stationary s.d. `sd`.
struct Wander {
    value: f64,
    rho: f64,
}

impl Wander {
    fn new(tau_frames: f64) -> Self {
        Wander {
            value: 0.0,
            rho: (-1.0 / tau_frames).exp(),
        }
    }

    fn step(&mut self, sd: f64, rng: &mut ChaCha8Rng) -> f64 {
        if sd > 0.0 {
            self.value = self.rho * self.value + (1.0 - self.rho * self.rho).sqrt() * sd * gauss(rng);
        } else {
            self.value *= self.rho;
        }
        self.value
    }
}

/// A timed pulse: frames left and total length.
#[derive(Default)]
struct Pulse {
    left: u64,
    len: u64,
    height: f64,
}

impl Pulse {
    fn active(&self) -> bool {
        self.left > 0
    }

    fn start(&mut self, len: u64, height: f64) {
        self.left = len.max(1);
        self.len = self.left;
        self.height = height;
    }

    /// Trapezoid envelope in [0, 1] with `ramp` frames on each side.
    fn advance(&mut self, ramp: u64) -> f64 {
        if self.left == 0 {
            return 0.0;
        }
        let pos = self.len - self.left;
        self.left -= 1;
        let r = ramp.min(self.len / 2).max(1) as f64;
        let up = (pos + 1) as f64 / r;
        let down = (self.left + 1) as f64 / r;
        up.min(down).min(1.0) * self.height
    }
}

fn fires(rng: &mut ChaCha8Rng, rate_per_min: f64, fps: f64) -> bool {
    rate_per_min > 0.0 && rng.gen::<f64>() < rate_per_min / (60.0 * fps)
}

fn clamp_channels(v: &mut [f64; N_CHANNELS]) {
    for (x, (lo, hi)) in v.iter_mut().zip(CHANNEL_RANGES) {
        *x = x.clamp(lo, hi);
    }
}

/// Render one video. Labels are the ground truth with consensus set; the
/// annotator simulation replaces them.
pub fn render_channels(
    segments: &[GroundTruthSegment],
    profile: &ParticipantProfile,
    video_id: &str,
    config: &GeneratorConfig,
    seed: u64,
) -> Vec<FrameRecord> {
    let mut rng = seed::rng(seed);
    let fps = config.fps;
    let ns = config.noise_scale;
    let lag = 1.0 / (LAG_SECONDS * fps);
    let (yaw, pitch, roll) = (ch("yaw"), ch("pitch"), ch("roll"));
    let (blink_c, eye) = (ch("blink"), ch("eye_closure"));
    let (mouth, yawn_c) = (ch("mouth_open"), ch("yawn"));
    let (smile_c, cheek, joy) = (ch("smile"), ch("cheek_raise"), ch("joy"));
    let (valence, brow_raise, surprise) = (ch("valence"), ch("brow_raise"), ch("surprise"));

    let mut pose_wander = [Wander::new(3.0 * fps), Wander::new(3.0 * fps), Wander::new(3.0 * fps)];
    let mut eye_wander = Wander::new(4.0 * fps);
    let mut expr_wander: Vec<Wander> = (0..N_CHANNELS).map(|_| Wander::new(2.0 * fps)).collect();
    let (mut blink, mut yawn, mut smile, mut plateau, mut dropout) =
        (Pulse::default(), Pulse::default(), Pulse::default(), Pulse::default(), Pulse::default());
    let mut jerk = 0.0f64;
    let jerk_decay = (-1.0 / (0.4 * fps)).exp();
    let nod_phase = rng.gen::<f64>() * std::f64::consts::TAU;

    let first = segments.first().map(|s| config.signature(s.state));
    let mut eye_level = first.map_or(0.0, |s| s.eye_closure_base);
    let mut droop = first.map_or(0.0, |s| s.head_droop_deg);
    let mut nod_amp = first.map_or(0.0, |s| s.nod_amplitude_deg);

    let mut out = Vec::with_capacity(segments.last().map_or(0, |s| s.end_frame) as usize);
    for seg in segments {
        let sig = config.signature(seg.state);
        let rate = |r: f64| r * profile.rate_scale;
        for t in seg.start_frame..seg.end_frame {
            eye_level += (sig.eye_closure_base - eye_level) * lag;
            droop += (sig.head_droop_deg - droop) * lag;
            nod_amp += (sig.nod_amplitude_deg - nod_amp) * lag;

            if !blink.active() && !plateau.active() && fires(&mut rng, rate(sig.blink_rate_per_min), fps) {
                let len = (sig.blink_frames * (0.6 + 0.8 * rng.gen::<f64>())).round().max(2.0);
                blink.start(len as u64, 1.0);
            }
            if !yawn.active() && fires(&mut rng, rate(sig.yawn_rate_per_min), fps) {
                let len = (fps * (3.0 + 3.0 * rng.gen::<f64>())).round();
                yawn.start(len as u64, 75.0 + 20.0 * rng.gen::<f64>());
            }
            if !smile.active() && !yawn.active() && fires(&mut rng, rate(sig.smile_rate_per_min), fps) {
                let len = (fps * (1.0 + 2.0 * rng.gen::<f64>())).round();
                smile.start(len as u64, 50.0 + 40.0 * rng.gen::<f64>());
            }
            if !plateau.active() && fires(&mut rng, rate(sig.jerk_rate_per_min), fps) {
                let len = (fps * (1.5 + 2.5 * rng.gen::<f64>())).round();
                plateau.start(len as u64, 1.0);
            }
            if !dropout.active() && fires(&mut rng, config.dropout_rate_per_min, fps) {
                dropout.start(5 + rng.gen_range(0..36), 1.0);
            }

            let b = blink.advance(1);
            let y = yawn.advance((0.8 * fps) as u64);
            let s = smile.advance((0.3 * fps) as u64);
            let was_plateau = plateau.active();
            let p = plateau.advance((0.3 * fps) as u64);
            if was_plateau && !plateau.active() {
                jerk = 10.0 + 6.0 * rng.gen::<f64>();
            }
            let tracked = dropout.advance(1) == 0.0;
            let j = jerk;
            jerk *= jerk_decay;

            let mut v = profile.baseline;
            for c in 3..N_CHANNELS {
                v[c] += expr_wander[c].step(1.5 * ns, &mut rng).abs();
            }
            let time = t as f64 / fps;
            let nod = nod_amp * (std::f64::consts::TAU * sig.nod_rate_hz * time + nod_phase).sin();
            v[yaw] += pose_wander[0].step(2.0 * ns, &mut rng) + 0.3 * j * gauss(&mut rng).signum();
            v[pitch] += pose_wander[1].step(1.5 * ns, &mut rng) - droop + nod - 8.0 * p + j;
            v[roll] += pose_wander[2].step(1.5 * ns, &mut rng) + 0.3 * nod;

            let mut e = eye_level + profile.eye_closure_offset + eye_wander.step(sig.eye_closure_drift * ns, &mut rng);
            e += 15.0 * y / 95.0;
            e = e.max(b * 90.0).max(p * 92.0);
            v[eye] = e;
            v[blink_c] = 100.0 * b;
            v[yawn_c] += y;
            v[mouth] += y * 0.95;
            v[smile_c] += s;
            v[cheek] += 0.6 * s;
            v[joy] += 0.9 * s;
            v[valence] = 0.6 * s - 0.1 * y;
            v[brow_raise] += 3.0 * j + 0.2 * y;
            v[surprise] += 2.0 * j;

            if ns > 0.0 {
                for (c, x) in v.iter_mut().enumerate() {
                    let sd = if c < 3 { 0.8 } else if c == valence { 2.0 } else { 1.5 };
                    *x += sd * ns * gauss(&mut rng);
                }
            }
            clamp_channels(&mut v);
            out.push(FrameRecord {
                participant_id: profile.participant_id.clone(),
                video_id: video_id.to_string(),
                frame_index: t,
                channels: if tracked { v } else { [0.0; N_CHANNELS] },
                raw_label: Some(seg.state),
                consensus: true,
                tracked,
            });
        }
    }
    out
}

fn adjacent(s: RawLabel, rng: &mut ChaCha8Rng) -> RawLabel {
    match s {
        RawLabel::Alert => RawLabel::SlightlyDrowsy,
        RawLabel::ExtremelyDrowsy => RawLabel::ModeratelyDrowsy,
        s if rng.gen_bool(0.5) => step_up(s),
        s => step_down(s),
    }
}

/// Three independent label tracks, one label per frame.
pub fn simulate_annotators(
    segments: &[GroundTruthSegment],
    noise: &AnnotatorNoise,
    seed: u64,
) -> [Vec<RawLabel>; 3] {
    let total = segments.last().map_or(0, |s| s.end_frame);
    let jitter = Normal::new(0.0, noise.boundary_sigma_frames.max(0.0)).expect("finite sigma");
    // A segment is misread toward one neighbouring level, the same for every
    // annotator, so whole-segment errors never leave the vote without a majority.
    let mut shared = seed::rng(seed::derive(seed, "confusion"));
    let confusable: Vec<RawLabel> = segments.iter().map(|s| adjacent(s.state, &mut shared)).collect();
    let mut tracks: [Vec<RawLabel>; 3] = Default::default();
    for (a, track) in tracks.iter_mut().enumerate() {
        let mut rng = seed::rng(seed::derive_indexed(seed, "annotator", a as u64));
        let labels: Vec<RawLabel> = segments
            .iter()
            .zip(&confusable)
            .map(|(s, c)| {
                if noise.mislabel_prob > 0.0 && rng.gen_bool(noise.mislabel_prob) {
                    *c
                } else {
                    s.state
                }
            })
            .collect();
        // Interior boundaries, jittered and kept ordered.
        let mut bounds = Vec::with_capacity(segments.len() + 1);
        bounds.push(0u64);
        for s in &segments[1.min(segments.len())..] {
            let shift = if noise.boundary_sigma_frames > 0.0 {
                jitter.sample(&mut rng).round()
            } else {
                0.0
            };
            let b = (s.start_frame as f64 + shift).clamp(0.0, total as f64) as u64;
            let prev = *bounds.last().expect("non-empty");
            bounds.push(b.max(prev));
        }
        bounds.push(total);
        *track = Vec::with_capacity(total as usize);
        for (k, label) in labels.iter().enumerate() {
            let len = bounds[k + 1] - bounds[k];
            track.extend(std::iter::repeat(*label).take(len as usize));
        }
    }
    tracks
}

/// Label held by at least two of the three annotators.
pub fn majority_vote(labels: [RawLabel; 3]) -> Option<RawLabel> {
    let [a, b, c] = labels;
    if a == b || a == c {
        Some(a)
    } else if b == c {
        Some(b)
    } else {
        None
    }
}

/// Overwrite frame labels with the annotators' majority vote.
pub fn apply_consensus(frames: &mut [FrameRecord], tracks: &[Vec<RawLabel>; 3]) {
    for (i, f) in frames.iter_mut().enumerate() {
        let vote = majority_vote([tracks[0][i], tracks[1][i], tracks[2][i]]);
        f.raw_label = vote;
        f.consensus = vote.is_some();
    }
}

/// One generated video with its ground truth.
pub struct GeneratedVideo {
    pub segments: Vec<GroundTruthSegment>,
    pub frames: Vec<FrameRecord>,
}

pub fn participant_id(p: usize) -> String {
    format!("P{:03}", p + 1)
}

pub fn video_id(v: usize) -> String {
    format!("V{}", v + 1)
}

pub fn participant_profile(config: &GeneratorConfig, p: usize) -> ParticipantProfile {
    ParticipantProfile::sample(
        participant_id(p),
        &config.variation,
        seed::derive_indexed(config.seed, "participant", p as u64),
    )
}

pub fn generate_video(config: &GeneratorConfig, profile: &ParticipantProfile, p: usize, v: usize) -> Result<GeneratedVideo> {
    let vseed = seed::derive_indexed(config.seed, "video", (p * config.videos_per_participant + v) as u64);
    let segments = simulate_states(config, seed::derive(vseed, "states"))?;
    let mut frames = render_channels(&segments, profile, &video_id(v), config, seed::derive(vseed, "render"));
    let tracks = simulate_annotators(&segments, &config.annotators, seed::derive(vseed, "annotators"));
    apply_consensus(&mut frames, &tracks);
    Ok(GeneratedVideo { segments, frames })
}

/// Generate and window a corpus in memory, without touching the disk.
pub fn generate_samples(config: &GeneratorConfig, window: &WindowConfig) -> Result<Vec<SampleDescriptor>> {
    config.validate()?;
    let mut out = Vec::new();
    for p in 0..config.n_participants {
        let profile = participant_profile(config, p);
        for v in 0..config.videos_per_participant {
            let video = generate_video(config, &profile, p, v)?;
            // Round-trip through the CSV text so values carry the file's precision.
            let mut csv = Vec::new();
            write_frames(&mut csv, &video.frames).map_err(|e| Error::io("frame buffer", e))?;
            out.extend(samples_from_frames(&parse_frames(csv.as_slice())?, window)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoEntry {
    pub participant_id: String,
    pub video_id: String,
    pub file: String,
    pub frames: u64,
    /// Ground-truth frames per raw state.
    pub truth_frames: [u64; 4],
    /// Consensus frames per raw state.
    pub consensus_frames: [u64; 4],
    pub no_consensus_frames: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub seed: u64,
    pub config: GeneratorConfig,
    pub participants: Vec<String>,
    pub videos: Vec<VideoEntry>,
    pub truth_frames: [u64; 4],
    pub consensus_frames: [u64; 4],
    pub no_consensus_frames: u64,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FRAMES_DIR: &str = "frames";

/// Write one CSV per video under `out_dir/frames` plus `out_dir/manifest.json`.
pub fn generate_corpus(config: &GeneratorConfig, out_dir: &Path) -> Result<CorpusManifest> {
    config.validate()?;
    let frames_dir = out_dir.join(FRAMES_DIR);
    fs::create_dir_all(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;
    let mut manifest = CorpusManifest {
        seed: config.seed,
        config: config.clone(),
        participants: Vec::new(),
        videos: Vec::new(),
        truth_frames: [0; 4],
        consensus_frames: [0; 4],
        no_consensus_frames: 0,
    };
    for p in 0..config.n_participants {
        let profile = participant_profile(config, p);
        manifest.participants.push(profile.participant_id.clone());
        for v in 0..config.videos_per_participant {
            let video = generate_video(config, &profile, p, v)?;
            let vid = video_id(v);
            let file = format!("{}_{vid}.csv", profile.participant_id);
            let path: PathBuf = frames_dir.join(&file);
            let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            write_frames(BufWriter::new(f), &video.frames).map_err(|e| Error::io(&path, e))?;

            let mut entry = VideoEntry {
                participant_id: profile.participant_id.clone(),
                video_id: vid,
                file: format!("{FRAMES_DIR}/{file}"),
                frames: video.frames.len() as u64,
                truth_frames: [0; 4],
                consensus_frames: [0; 4],
                no_consensus_frames: 0,
            };
            for s in &video.segments {
                entry.truth_frames[s.state.index()] += s.end_frame - s.start_frame;
            }
            for f in &video.frames {
                match f.usable_label() {
                    Some(l) => entry.consensus_frames[l.index()] += 1,
                    None => entry.no_consensus_frames += 1,
                }
            }
            for k in 0..4 {
                manifest.truth_frames[k] += entry.truth_frames[k];
                manifest.consensus_frames[k] += entry.consensus_frames[k];
            }
            manifest.no_consensus_frames += entry.no_consensus_frames;
            manifest.videos.push(entry);
        }
    }
    let path = out_dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GeneratorConfig {
        GeneratorConfig {
            n_participants: 2,
            videos_per_participant: 1,
            video_frames: 3000,
            ..GeneratorConfig::default()
        }
    }

    #[test]
    fn segments_tile_video() {
        let cfg = small();
        for seed in 0..20 {
            let segs = simulate_states(&cfg, seed).unwrap();
            assert_eq!(segs[0].start_frame, 0);
            assert_eq!(segs.last().unwrap().end_frame, cfg.video_frames);
            for w in segs.windows(2) {
                assert_eq!(w[0].end_frame, w[1].start_frame);
                assert_eq!((w[0].state.index() as i64 - w[1].state.index() as i64).abs(), 1);
            }
            assert!(segs.iter().all(|s| s.end_frame > s.start_frame));
        }
    }

    #[test]
    fn infinite_dwell_is_one_alert_segment() {
        let mut cfg = small();
        for s in cfg.states.iter_mut() {
            s.dwell_mean_s = f64::INFINITY;
        }
        let segs = simulate_states(&cfg, 3).unwrap();
        assert_eq!(
            segs,
            vec![GroundTruthSegment {
                state: RawLabel::Alert,
                start_frame: 0,
                end_frame: cfg.video_frames
            }]
        );
    }

    #[test]
    fn quiet_render_is_constant() {
        let mut cfg = small();
        cfg.noise_scale = 0.0;
        cfg.dropout_rate_per_min = 0.0;
        for s in cfg.states.iter_mut() {
            s.blink_rate_per_min = 0.0;
            s.yawn_rate_per_min = 0.0;
            s.smile_rate_per_min = 0.0;
            s.jerk_rate_per_min = 0.0;
            s.nod_amplitude_deg = 0.0;
        }
        let profile = participant_profile(&cfg, 0);
        let segs = [GroundTruthSegment {
            state: RawLabel::Alert,
            start_frame: 0,
            end_frame: 500,
        }];
        let frames = render_channels(&segs, &profile, "V1", &cfg, 1);
        for f in &frames {
            assert_eq!(f.channels, frames[0].channels);
        }
        let mut expected = profile.baseline;
        expected[ch("eye_closure")] = cfg.states[0].eye_closure_base + profile.eye_closure_offset;
        clamp_channels(&mut expected);
        for (a, b) in frames[0].channels.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn channels_in_range() {
        let cfg = small();
        let profile = participant_profile(&cfg, 1);
        let video = generate_video(&cfg, &profile, 1, 0).unwrap();
        for f in &video.frames {
            for (v, (lo, hi)) in f.channels.iter().zip(CHANNEL_RANGES) {
                assert!(*v >= lo && *v <= hi);
            }
        }
    }

    #[test]
    fn clean_annotators_match_truth() {
        let cfg = small();
        let segs = simulate_states(&cfg, 5).unwrap();
        let noise = AnnotatorNoise {
            boundary_sigma_frames: 0.0,
            mislabel_prob: 0.0,
        };
        let tracks = simulate_annotators(&segs, &noise, 9);
        for track in &tracks {
            assert_eq!(track.len() as u64, cfg.video_frames);
            for s in &segs {
                for t in s.start_frame..s.end_frame {
                    assert_eq!(track[t as usize], s.state);
                }
            }
        }
    }

    #[test]
    fn noisy_tracks_keep_length() {
        let cfg = small();
        let segs = simulate_states(&cfg, 6).unwrap();
        let noise = AnnotatorNoise {
            boundary_sigma_frames: 40.0,
            mislabel_prob: 0.3,
        };
        for track in simulate_annotators(&segs, &noise, 2) {
            assert_eq!(track.len() as u64, cfg.video_frames);
        }
    }

    #[test]
    fn vote_examples() {
        use RawLabel::*;
        assert_eq!(majority_vote([SlightlyDrowsy, SlightlyDrowsy, ModeratelyDrowsy]), Some(SlightlyDrowsy));
        assert_eq!(majority_vote([Alert, SlightlyDrowsy, ModeratelyDrowsy]), None);
        assert_eq!(majority_vote([ExtremelyDrowsy; 3]), Some(ExtremelyDrowsy));
    }

    #[test]
    fn config_checks() {
        let mut cfg = small();
        cfg.annotators.mislabel_prob = 0.5;
        assert!(cfg.validate().is_err());
        let mut cfg = small();
        cfg.states[1].blink_rate_per_min = -1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = small();
        for s in cfg.states.iter_mut() {
            s.dwell_mean_s = 5.0;
        }
        assert!(cfg.validate().is_err());
        assert!(GeneratorConfig::default().validate().is_ok());
    }
}
