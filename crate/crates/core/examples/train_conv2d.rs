//! Train the 2-D convolutional classifier on a small generated corpus.
//!
//! cargo run --example train_conv2d -- [epochs]

use drowsy::dataset::{split_by_participant, ChannelNormalizer, SplitConfig, WindowConfig};
use drowsy::eval::{evaluate, render_confusion, render_table};
use drowsy::models::{train_classifier, ModelName, TrainConfig};
use drowsy::synth::{generate_samples, GeneratorConfig};

fn main() -> drowsy::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10);
    let gen = GeneratorConfig {
        n_participants: 30,
        ..GeneratorConfig::default()
    };
    let samples = generate_samples(&gen, &WindowConfig::default())?;
    let split = split_by_participant(samples, &SplitConfig { n_test_participants: 8, seed: 1, ..SplitConfig::default() })?;
    let norm = ChannelNormalizer::fit(&split.train)?;
    let (train, val) = (norm.apply_all(&split.train), norm.apply_all(&split.val));

    let cfg = TrainConfig { epochs, seed: 3, ..TrainConfig::default() };
    let (mut clf, hist) = train_classifier(ModelName::Conv2dRaw, &train, &val, &norm, &cfg, None)?;
    for (e, (t, v)) in hist.train_loss.iter().zip(&hist.val_loss).enumerate() {
        println!("epoch {:>2}  train {t:.4}  val {v:.4}", e + 1);
    }

    // The classifier normalizes raw samples itself.
    let scores = clf.predict_scores(&split.test)?;
    let labels: Vec<_> = split.test.iter().map(|s| s.label).collect();
    let r = evaluate("conv2d-raw", &scores, &labels, None)?;
    print!("\n{}\n{}", render_table(std::slice::from_ref(&r)), render_confusion(&r.confusion));
    Ok(())
}
