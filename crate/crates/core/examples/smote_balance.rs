//! Oversample the minority classes of a training split.

use drowsy::balance::{smote_oversample, SmoteConfig};
use drowsy::dataset::{class_counts, split_by_participant, Partition, SplitConfig, WindowConfig};
use drowsy::synth::{generate_samples, GeneratorConfig};

fn main() -> drowsy::Result<()> {
    let gen = GeneratorConfig {
        n_participants: 20,
        ..GeneratorConfig::default()
    };
    let samples = generate_samples(&gen, &WindowConfig::default())?;
    let split = split_by_participant(samples, &SplitConfig { n_test_participants: 4, seed: 5, ..SplitConfig::default() })?;
    println!("train before: {:?}", class_counts(&split.train));

    let cfg = SmoteConfig { seed: 11, ..SmoteConfig::default() };
    let balanced = smote_oversample(&split.train, Partition::Train, &cfg)?;
    println!("train after:  {:?}", class_counts(&balanced));
    let synthetic = balanced.iter().filter(|s| s.synthetic).count();
    println!("{synthetic} synthetic windows appended after {} originals", split.train.len());

    // Validation and test data are never oversampled.
    match smote_oversample(&split.test, Partition::Test, &cfg) {
        Err(e) => println!("test split refused: {e}"),
        Ok(_) => unreachable!("oversampling the test split must fail"),
    }
    Ok(())
}
