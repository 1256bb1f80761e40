use drowsy::dataset::{channel_index, MergedLabel, SampleDescriptor, GRID_LEN, N_STEPS};
use drowsy::features::featurize_all;
use drowsy::forest::{fit_forest, fit_forest_vectors, ForestConfig, RandomForest};
use drowsy::eval::argmax;
use proptest::prelude::*;
use rand::Rng;

fn blobs(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<MergedLabel>) {
    let mut rng = drowsy::seed::rng(seed);
    let centers = [[0.0, 0.0], [5.0, 0.0], [0.0, 5.0]];
    (0..n)
        .map(|i| {
            let c = i % 3;
            let row = (0..4)
                .map(|d| if d < 2 { centers[c][d] } else { 0.0 } + rng.gen_range(-1.0..1.0))
                .collect();
            (row, MergedLabel::ALL[c])
        })
        .unzip()
}

fn cfg(seed: u64) -> ForestConfig {
    ForestConfig {
        n_trees: 30,
        features_per_split: 2,
        seed,
        ..ForestConfig::default()
    }
}

fn accuracy(f: &RandomForest, x: &[Vec<f64>], y: &[MergedLabel]) -> f64 {
    let p = f.predict_proba_all(x).unwrap();
    p.iter().zip(y).filter(|(s, l)| argmax(s) == **l).count() as f64 / y.len() as f64
}

#[test]
fn separable_blobs_generalize() {
    let (x, y) = blobs(200, 1);
    let (tx, ty) = blobs(150, 2);
    let f = fit_forest(&x, &y, &cfg(3)).unwrap();
    assert!(accuracy(&f, &tx, &ty) >= 0.95);
}

#[test]
fn same_seed_same_forest() {
    let (x, y) = blobs(90, 4);
    let a = fit_forest(&x, &y, &cfg(5)).unwrap();
    let b = fit_forest(&x, &y, &cfg(5)).unwrap();
    assert_eq!(a, b);
    let c = fit_forest(&x, &y, &cfg(6)).unwrap();
    assert_ne!(a, c);
}

#[test]
fn duplicate_rows_with_conflicting_labels() {
    let x = vec![vec![1.0, 2.0]; 6];
    let y = vec![
        MergedLabel::Alert,
        MergedLabel::Alert,
        MergedLabel::Slight,
        MergedLabel::ModExt,
        MergedLabel::ModExt,
        MergedLabel::ModExt,
    ];
    let f = fit_forest(&x, &y, &ForestConfig { n_trees: 3, bootstrap: false, ..cfg(1) }).unwrap();
    let p = f.predict_proba(&[1.0, 2.0]).unwrap();
    assert!((p[0] - 2.0 / 6.0).abs() < 1e-12);
    assert!((p[2] - 0.5).abs() < 1e-12);
    let imp = f.feature_importance().unwrap();
    assert_eq!(imp.per_feature, vec![0.5, 0.5]);
}

#[test]
fn checkpoint_round_trip() {
    let (x, y) = blobs(60, 7);
    let f = fit_forest(&x, &y, &cfg(8)).unwrap();
    let back = RandomForest::from_json(&f.to_json().unwrap()).unwrap();
    assert_eq!(f.predict_proba_all(&x).unwrap(), back.predict_proba_all(&x).unwrap());
    assert_eq!(f, back);
}

#[test]
fn wrong_width_rejected() {
    let (x, y) = blobs(30, 9);
    let f = fit_forest(&x, &y, &cfg(1)).unwrap();
    assert!(f.predict_proba(&[0.0; 3]).is_err());
}

#[test]
fn planted_channel_ranks_first() {
    let eye = channel_index("eye_closure").unwrap();
    let mut rng = drowsy::seed::rng(10);
    let samples: Vec<SampleDescriptor> = (0..150)
        .map(|i| {
            let label = MergedLabel::ALL[i % 3];
            let mut grid: Vec<f64> = (0..GRID_LEN).map(|_| rng.gen_range(0.0..10.0)).collect();
            for v in &mut grid[eye * N_STEPS..(eye + 1) * N_STEPS] {
                *v = 20.0 * label.index() as f64 + rng.gen_range(0.0..5.0);
            }
            SampleDescriptor::new(grid, label, format!("p{}", i % 7), "v1", i as u64).unwrap()
        })
        .collect();
    let f = fit_forest_vectors(&featurize_all(&samples), &ForestConfig { seed: 2, ..ForestConfig::default() }).unwrap();
    let imp = f.feature_importance().unwrap();
    assert_eq!(imp.channel_ranking()[0], eye);
    assert!((imp.per_feature.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!((imp.per_channel.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn depth_and_probabilities_hold(seed in any::<u64>(), depth in 1usize..6, n in 6usize..60) {
        let (x, y) = blobs(n, seed);
        let c = ForestConfig { n_trees: 5, max_depth: depth, ..cfg(seed) };
        let f = fit_forest(&x, &y, &c).unwrap();
        for t in &f.trees {
            prop_assert!(t.depth() <= depth);
        }
        for p in f.predict_proba_all(&x).unwrap() {
            prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let imp = f.feature_importance().unwrap();
        prop_assert!((imp.per_feature.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(imp.per_feature.iter().all(|v| *v >= 0.0));
    }
}

/// Three classes cut by the lines a + b = ±1, with a margin around each.
fn diagonal_bands(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<MergedLabel>) {
    let mut rng = drowsy::seed::rng(seed);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    while x.len() < n {
        let (a, b): (f64, f64) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let s = a + b;
        if (s.abs() - 1.0).abs() < 0.2 {
            continue;
        }
        x.push(vec![a, b]);
        y.push(MergedLabel::ALL[if s < -1.0 { 0 } else if s < 1.0 { 1 } else { 2 }]);
    }
    (x, y)
}

#[test]
fn default_config_on_oblique_boundaries() {
    let (x, y) = diagonal_bands(200, 500);
    let (tx, ty) = diagonal_bands(300, 501);
    let f = fit_forest(&x, &y, &ForestConfig { seed: 1, ..ForestConfig::default() }).unwrap();
    let acc = accuracy(&f, &tx, &ty);
    assert!(acc >= 0.95, "{acc}");
}
