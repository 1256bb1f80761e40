//! Cut one generated video into labelled windows and resample them.

use drowsy::dataset::{class_counts, extract_windows, to_sample, MergedLabel, WindowConfig, CHANNEL_NAMES, N_STEPS};
use drowsy::synth::{generate_video, participant_profile, GeneratorConfig};

fn main() -> drowsy::Result<()> {
    let cfg = GeneratorConfig {
        video_frames: 9000,
        ..GeneratorConfig::default()
    };
    let profile = participant_profile(&cfg, 3);
    let video = generate_video(&cfg, &profile, 3, 0)?;
    println!("ground truth:");
    for s in &video.segments {
        println!("  {:?} frames {}..{}", s.state, s.start_frame, s.end_frame);
    }

    let window = WindowConfig::default();
    let blocks = extract_windows(&video.frames, &window)?;
    let samples = blocks.iter().map(to_sample).collect::<drowsy::Result<Vec<_>>>()?;
    let counts = class_counts(&samples);
    for c in MergedLabel::ALL {
        println!("{:<7} {:>4} windows, stride {}", c.name(), counts[c.index()], window.stride(c));
    }

    if let Some(s) = samples.first() {
        println!("first window starts at frame {}, label {}", s.start_frame, s.label.name());
        let eye = s.channel(7);
        println!(
            "{} resampled to {N_STEPS} steps: first {:.2}, middle {:.2}, last {:.2}",
            CHANNEL_NAMES[7],
            eye[0],
            eye[N_STEPS / 2],
            eye[N_STEPS - 1]
        );
    }
    Ok(())
}
