//! Write a synthetic corpus to disk and summarize its manifest.
//!
//! cargo run --example generate_corpus -- [out_dir] [participants]

use std::path::PathBuf;

use drowsy::dataset::RawLabel;
use drowsy::synth::{generate_corpus, GeneratorConfig};

fn main() -> drowsy::Result<()> {
    let mut args = std::env::args().skip(1);
    let out: PathBuf = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("drowsy-corpus"));
    let participants = args.next().and_then(|a| a.parse().ok()).unwrap_or(70);

    let cfg = GeneratorConfig {
        n_participants: participants,
        ..GeneratorConfig::default()
    };
    let m = generate_corpus(&cfg, &out)?;
    println!("{} videos under {}", m.videos.len(), out.display());
    let total: u64 = m.truth_frames.iter().sum();
    for s in RawLabel::ALL {
        let k = s.index();
        println!(
            "{:<18} truth {:>7} frames ({:>5.1}%)  consensus {:>7}",
            format!("{s:?}"),
            m.truth_frames[k],
            100.0 * m.truth_frames[k] as f64 / total as f64,
            m.consensus_frames[k]
        );
    }
    println!("no majority: {} frames", m.no_consensus_frames);
    Ok(())
}
