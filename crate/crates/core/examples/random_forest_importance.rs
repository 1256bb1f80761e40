//! Fit the forest baseline on statistics features and rank channels.

use drowsy::dataset::{split_by_participant, ChannelNormalizer, SplitConfig, WindowConfig, CHANNEL_NAMES};
use drowsy::eval::{evaluate, render_table};
use drowsy::features::featurize_all;
use drowsy::forest::{fit_forest_vectors, ForestConfig};
use drowsy::synth::{generate_samples, GeneratorConfig};

fn main() -> drowsy::Result<()> {
    let gen = GeneratorConfig {
        n_participants: 30,
        ..GeneratorConfig::default()
    };
    let samples = generate_samples(&gen, &WindowConfig::default())?;
    let split = split_by_participant(samples, &SplitConfig { n_test_participants: 8, seed: 1, ..SplitConfig::default() })?;
    let norm = ChannelNormalizer::fit(&split.train)?;
    let train = featurize_all(&norm.apply_all(&split.train));
    let test = featurize_all(&norm.apply_all(&split.test));

    let forest = fit_forest_vectors(&train, &ForestConfig { seed: 7, ..ForestConfig::default() })?;
    let rows: Vec<Vec<f64>> = test.iter().map(|f| f.values.clone()).collect();
    let scores = forest.predict_proba_all(&rows)?;
    let labels: Vec<_> = test.iter().map(|f| f.label).collect();
    match evaluate("rf-baseline", &scores, &labels, None) {
        Ok(r) => print!("{}", render_table(&[r])),
        Err(e) => println!("test split cannot be scored: {e}"),
    }

    let imp = forest.feature_importance()?;
    println!("\nchannel importance");
    for c in imp.channel_ranking().into_iter().take(8) {
        println!("  {:<16} {:.4}", CHANNEL_NAMES[c], imp.per_channel[c]);
    }
    Ok(())
}
