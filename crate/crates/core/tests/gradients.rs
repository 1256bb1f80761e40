//! Layer-level finite-difference checks at 1e-4 relative error.

use drowsy::neural::gradcheck::{check_coordinates, check_network, sample_coords};
use drowsy::neural::ops::{self, Mode};
use drowsy::neural::{LayerSpec, Network, Tensor};
use drowsy::Result;
use rand::Rng;

const STEP: f64 = 1e-5;
const LAYER_TOL: f64 = 1e-4;

fn random(shape: &[usize], seed: u64) -> Tensor {
    let mut rng = drowsy::seed::rng(seed);
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Loss = Σ y ⊙ R for a fixed random R of the output shape.
fn weighted_sum(seed: u64) -> impl Fn(&Tensor) -> Result<(f64, Tensor)> {
    move |y: &Tensor| {
        let r = random(y.shape(), seed);
        let loss = y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum();
        Ok((loss, r))
    }
}

fn check_layer(input: &[usize], specs: Vec<LayerSpec>, batch: usize, seed: u64) {
    let mut net = Network::new(input, &specs, seed).unwrap();
    // Re-randomize biases so they are exercised too.
    for layer in &mut net.layers {
        for p in &mut layer.params {
            let shape = p.shape().to_vec();
            *p = random(&shape, seed ^ p.len() as u64);
        }
    }
    let mut shape = vec![batch];
    shape.extend_from_slice(input);
    let x = random(&shape, seed + 1);
    let loss = weighted_sum(seed + 2);
    let report = check_network(&mut net, &x, &loss, 30, STEP, seed).unwrap();
    assert!(report.checked >= 20, "{report:?}");
    assert!(
        report.max_rel_error <= LAYER_TOL,
        "{}: {report:?}",
        specs[0].name()
    );
}

#[test]
fn dense_gradients() {
    for seed in 0..5 {
        check_layer(&[7], vec![LayerSpec::Dense { input: 7, units: 5 }], 4, seed);
    }
}

#[test]
fn conv1d_gradients() {
    for (seed, stride) in [(1, 1), (2, 2), (3, 3)] {
        let spec = LayerSpec::Conv1d { in_channels: 3, out_channels: 4, kernel: 3, stride };
        check_layer(&[3, 11], vec![spec], 2, seed);
    }
}

#[test]
fn conv2d_gradients() {
    for (seed, stride) in [(4, [1, 1]), (5, [2, 2]), (6, [1, 2])] {
        let spec = LayerSpec::Conv2d { in_channels: 2, out_channels: 3, kernel: [3, 3], stride };
        check_layer(&[2, 6, 9], vec![spec], 2, seed);
    }
}

#[test]
fn lstm_two_step_gradients() {
    for seed in 7..10 {
        check_layer(&[2, 4], vec![LayerSpec::Lstm { input: 4, hidden: 3 }], 2, seed);
    }
}

#[test]
fn stacked_lstm_gradients() {
    let specs = vec![
        LayerSpec::Lstm { input: 3, hidden: 4 },
        LayerSpec::Lstm { input: 4, hidden: 3 },
        LayerSpec::LastStep,
    ];
    check_layer(&[5, 3], specs, 3, 11);
}

#[test]
fn pooling_softmax_flatten_gradients() {
    check_layer(&[3, 4, 5], vec![LayerSpec::GlobalAvgPool], 2, 12);
    check_layer(&[6], vec![LayerSpec::Softmax], 5, 13);
    check_layer(&[2, 3, 4], vec![LayerSpec::Flatten], 2, 14);
}

#[test]
fn leaky_relu_gradients_away_from_kink() {
    let mut rng = drowsy::seed::rng(15);
    let data: Vec<f64> = (0..200)
        .map(|_| {
            let v: f64 = rng.gen_range(0.01..2.0);
            if rng.gen::<bool>() { v } else { -v }
        })
        .collect();
    let x = Tensor::new(vec![10, 20], data).unwrap();
    let r = random(&[10, 20], 16);
    let f = |v: &[f64]| {
        let t = Tensor::new(vec![10, 20], v.to_vec()).unwrap();
        ops::leaky_relu(&t, 0.01).data().iter().zip(r.data()).map(|(a, b)| a * b).sum::<f64>()
    };
    let g = ops::leaky_relu_backward(&x, &r, 0.01);
    let coords = sample_coords(&mut rng, x.len(), 40);
    let rep = check_coordinates(x.data(), g.data(), &coords, STEP, "x", f);
    assert!(rep.max_rel_error <= LAYER_TOL, "{rep:?}");
}

#[test]
fn dropout_gradients_with_fixed_mask() {
    let x = random(&[4, 25], 17);
    let r = random(&[4, 25], 18);
    let (_, mask) = ops::dropout(&x, 0.3, Mode::Train, 99).unwrap();
    let g = ops::dropout_backward(&mask, &r);
    let f = |v: &[f64]| {
        let t = Tensor::new(vec![4, 25], v.to_vec()).unwrap();
        let (y, _) = ops::dropout(&t, 0.3, Mode::Train, 99).unwrap();
        y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum::<f64>()
    };
    let coords: Vec<usize> = (0..100).collect();
    let rep = check_coordinates(x.data(), g.data(), &coords, STEP, "x", f);
    assert!(rep.max_rel_error <= LAYER_TOL, "{rep:?}");
}

#[test]
fn cross_entropy_gradients() {
    let logits = random(&[5, 3], 19);
    let targets = [0, 2, 1, 1, 0];
    let (_, g) = ops::softmax_cross_entropy(&logits, &targets).unwrap();
    let f = |v: &[f64]| {
        let t = Tensor::new(vec![5, 3], v.to_vec()).unwrap();
        ops::softmax_cross_entropy(&t, &targets).unwrap().0
    };
    let coords: Vec<usize> = (0..15).collect();
    let rep = check_coordinates(logits.data(), g.data(), &coords, STEP, "logits", f);
    assert!(rep.max_rel_error <= LAYER_TOL, "{rep:?}");
}

#[test]
fn mae_gradients_away_from_ties() {
    let pred = random(&[6, 5], 20);
    let target = random(&[6, 5], 21);
    let (_, g) = ops::mae_loss(&pred, &target).unwrap();
    let coords: Vec<usize> = (0..30)
        .filter(|&i| (pred.data()[i] - target.data()[i]).abs() > 1e-6)
        .collect();
    let f = |v: &[f64]| {
        let t = Tensor::new(vec![6, 5], v.to_vec()).unwrap();
        ops::mae_loss(&t, &target).unwrap().0
    };
    let rep = check_coordinates(pred.data(), g.data(), &coords, STEP, "pred", f);
    assert!(rep.checked >= 20);
    assert!(rep.max_rel_error <= LAYER_TOL, "{rep:?}");
}
