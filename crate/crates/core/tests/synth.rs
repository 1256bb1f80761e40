use std::fs;
use std::path::Path;

use drowsy::dataset::{channel_index, RawLabel, WindowConfig};
use drowsy::pipeline::load_samples;
use drowsy::synth::{
    generate_corpus, generate_samples, generate_video, participant_profile, simulate_annotators, simulate_states, majority_vote,
    AnnotatorNoise, GeneratorConfig, GroundTruthSegment, MANIFEST_FILE,
};
use sha2::{Digest, Sha256};

/// Digest of every file under `dir`, in sorted path order.
fn tree_digest(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, Sha256::digest(fs::read(&p).unwrap()).to_vec()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn dwell_times_match_configured_means() {
    // Long videos keep the length bias of interior segments negligible.
    let cfg = GeneratorConfig {
        video_frames: 60_000,
        ..GeneratorConfig::default()
    };
    let mut sums = [0.0; 4];
    let mut counts = [0usize; 4];
    for v in 0..10_000u64 {
        let segs = simulate_states(&cfg, drowsy::seed::derive_indexed(5, "dwell", v)).unwrap();
        if segs.len() < 3 {
            continue;
        }
        for s in &segs[1..segs.len() - 1] {
            sums[s.state.index()] += (s.end_frame - s.start_frame) as f64;
            counts[s.state.index()] += 1;
        }
    }
    for k in 0..4 {
        assert!(counts[k] > 100, "state {k} seen {} times", counts[k]);
        let mean = sums[k] / counts[k] as f64;
        let want = cfg.states[k].dwell_mean_s * cfg.fps;
        assert!((mean / want - 1.0).abs() < 0.10, "state {k}: {mean} vs {want}");
    }
}

fn channel_means_by_state(cfg: &GeneratorConfig, videos: usize, channel: usize) -> [f64; 4] {
    let mut sum = [0.0; 4];
    let mut n = [0usize; 4];
    for p in 0..videos {
        let profile = participant_profile(cfg, p);
        let video = generate_video(cfg, &profile, p, 0).unwrap();
        for seg in &video.segments {
            for f in &video.frames[seg.start_frame as usize..seg.end_frame as usize] {
                if f.tracked {
                    sum[seg.state.index()] += f.channels[channel];
                    n[seg.state.index()] += 1;
                }
            }
        }
    }
    let mut out = [f64::NAN; 4];
    for k in 0..4 {
        if n[k] > 0 {
            out[k] = sum[k] / n[k] as f64;
        }
    }
    out
}

#[test]
fn eye_closure_and_mouth_rise_with_severity() {
    let cfg = GeneratorConfig::default();
    let eye = channel_means_by_state(&cfg, 100, channel_index("eye_closure").unwrap());
    assert!(eye[3] > eye[0], "{eye:?}");
    for c in ["eye_closure", "mouth_open"] {
        let m = channel_means_by_state(&cfg, 100, channel_index(c).unwrap());
        assert!(m[2].min(m[3]) > m[0], "{c}: {m:?}");
    }
}

fn near_boundary(segs: &[GroundTruthSegment], frame: u64, radius: f64) -> bool {
    segs[1..].iter().any(|s| (s.start_frame as f64 - frame as f64).abs() <= radius)
}

#[test]
fn disagreement_clusters_at_boundaries() {
    let cfg = GeneratorConfig::default();
    let noise = AnnotatorNoise::default();
    let (mut near, mut total) = (0usize, 0usize);
    for v in 0..300u64 {
        let segs = simulate_states(&cfg, drowsy::seed::derive_indexed(8, "vote", v)).unwrap();
        let tracks = simulate_annotators(&segs, &noise, v);
        for i in 0..tracks[0].len() {
            if majority_vote([tracks[0][i], tracks[1][i], tracks[2][i]]).is_none() {
                total += 1;
                if near_boundary(&segs, i as u64, 3.0 * noise.boundary_sigma_frames) {
                    near += 1;
                }
            }
        }
    }
    assert!(total > 0);
    assert!(near as f64 >= 0.9 * total as f64, "{near} of {total}");
}

#[test]
fn corpus_manifest_and_regeneration() {
    let cfg = GeneratorConfig::default();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let m = generate_corpus(&cfg, a.path()).unwrap();
    generate_corpus(&cfg, b.path()).unwrap();
    assert_eq!(m.participants.len(), 70);
    assert_eq!(m.videos.len(), 70);
    assert!(a.path().join(MANIFEST_FILE).exists());
    assert_eq!(tree_digest(a.path()), tree_digest(b.path()));

    let t = m.truth_frames;
    let total: u64 = t.iter().sum();
    assert_eq!(total, 70 * cfg.video_frames);
    assert!(t[RawLabel::Alert.index()] > 2 * t[1], "{t:?}");
    assert!(t[1] > t[2] && t[2] > t[3], "{t:?}");

    let other = GeneratorConfig { seed: 43, ..cfg };
    let c = tempfile::tempdir().unwrap();
    generate_corpus(&other, c.path()).unwrap();
    assert_ne!(tree_digest(a.path()), tree_digest(c.path()));
}

#[test]
fn in_memory_samples_match_the_csv_path() {
    let cfg = GeneratorConfig { n_participants: 6, video_frames: 6000, ..GeneratorConfig::default() };
    let window = WindowConfig::default();
    let dir = tempfile::tempdir().unwrap();
    generate_corpus(&cfg, dir.path()).unwrap();
    let mut from_disk = load_samples(dir.path(), &window).unwrap();
    let mut in_memory = generate_samples(&cfg, &window).unwrap();
    assert!(!in_memory.is_empty());
    from_disk.sort_by(|a, b| a.key().cmp(&b.key()));
    in_memory.sort_by(|a, b| a.key().cmp(&b.key()));
    assert_eq!(from_disk, in_memory);
}
