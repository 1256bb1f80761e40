//! Pretrain the autoencoder, then classify its 108-D codes.

use drowsy::dataset::{split_by_participant, ChannelNormalizer, SplitConfig, WindowConfig};
use drowsy::eval::{evaluate, render_table};
use drowsy::models::{train_autoencoder, train_classifier, ModelName, TrainConfig};
use drowsy::synth::{generate_samples, GeneratorConfig};

fn main() -> drowsy::Result<()> {
    let gen = GeneratorConfig {
        n_participants: 24,
        ..GeneratorConfig::default()
    };
    let samples = generate_samples(&gen, &WindowConfig::default())?;
    let split = split_by_participant(samples, &SplitConfig { n_test_participants: 6, seed: 2, ..SplitConfig::default() })?;
    let norm = ChannelNormalizer::fit(&split.train)?;
    let (train, val) = (norm.apply_all(&split.train), norm.apply_all(&split.val));

    let cfg = TrainConfig { epochs: 5, seed: 9, ..TrainConfig::default() };
    let (mut ae, ae_hist) = train_autoencoder(&train, &norm, &cfg)?;
    println!("reconstruction MAE per epoch: {:?}", ae_hist.train_loss.iter().map(|l| format!("{l:.3}")).collect::<Vec<_>>());

    let recon = ae.reconstruct(&split.test[..1])?;
    let err: f64 = recon[0].iter().zip(&norm.apply(&split.test[0]).grid).map(|(a, b)| (a - b).abs()).sum::<f64>() / recon[0].len() as f64;
    let code = ae.encode(&split.test[..1])?;
    println!("first test window: code length {}, reconstruction MAE {err:.3}", code[0].len());

    let (mut clf, _) = train_classifier(ModelName::MlpEnc, &train, &val, &norm, &cfg, Some(ae))?;
    let scores = clf.predict_scores(&split.test)?;
    let labels: Vec<_> = split.test.iter().map(|s| s.label).collect();
    print!("{}", render_table(&[evaluate("mlp-enc", &scores, &labels, None)?]));
    Ok(())
}
