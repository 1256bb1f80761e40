//! Six statistics per channel, written as a CSV on stdout.

use drowsy::dataset::{SampleDescriptor, WindowConfig};
use drowsy::features::{feature_names, featurize_sample, write_feature_csv};
use drowsy::synth::{generate_samples, GeneratorConfig};

fn main() -> drowsy::Result<()> {
    let cfg = GeneratorConfig {
        n_participants: 2,
        ..GeneratorConfig::default()
    };
    let samples = generate_samples(&cfg, &WindowConfig::default())?;
    eprintln!("{} samples x {} features", samples.len(), feature_names().len());

    // One row per label is enough to eyeball.
    let mut picked: Vec<SampleDescriptor> = Vec::new();
    for s in &samples {
        if !picked.iter().any(|p| p.label == s.label) {
            picked.push(s.clone());
        }
    }
    for s in &picked {
        let f = featurize_sample(s);
        eprintln!("{}: eye_closure mean {:.2}, std {:.2}", s.label.name(), f.values[42], f.values[45]);
    }
    write_feature_csv(std::io::stdout().lock(), &picked).map_err(|e| drowsy::Error::io("stdout", e))
}
