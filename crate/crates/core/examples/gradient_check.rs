//! Finite-difference spot checks of every shipped architecture.

use drowsy::models::{build_model, ModelName};
use drowsy::neural::gradcheck::check_network;
use drowsy::neural::ops::{mae_loss, softmax_cross_entropy};
use drowsy::neural::{Network, Tensor};
use rand::Rng;

fn main() -> drowsy::Result<()> {
    let mut rng = drowsy::seed::rng(5);
    for name in ModelName::ALL {
        let spec = build_model(name)?;
        let mut net = Network::new(&spec.input_shape, &spec.layers, 1)?;
        let mut shape = vec![2];
        shape.extend_from_slice(&spec.input_shape);
        let n: usize = shape.iter().product();
        let x = Tensor::new(shape, (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect())?;
        let report = if name == ModelName::Autoencoder {
            let target = Tensor::new(vec![2, n / 2], (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
            check_network(&mut net, &x, &|y| mae_loss(y, &target), 25, 1e-5, 2)?
        } else {
            check_network(&mut net, &x, &|y| softmax_cross_entropy(y, &[0, 2]), 25, 1e-5, 2)?
        };
        println!(
            "{:<12} {:>8} params  {:>2} coords  max rel err {:.2e}  worst {}",
            name.as_str(),
            net.param_count(),
            report.checked,
            report.max_rel_error,
            report.worst
        );
    }
    Ok(())
}
