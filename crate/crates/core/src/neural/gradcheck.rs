//! Central finite-difference gradient checking.

use rand::Rng;

use super::{Mode, Network, Tensor};
use crate::error::Result;
use crate::seed;

/// Below this magnitude gradients are compared on an absolute scale.
pub const MAGNITUDE_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(MAGNITUDE_FLOOR)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    /// Where the worst mismatch occurred.
    pub worst: String,
}

impl GradCheckReport {
    fn new() -> Self {
        GradCheckReport {
            checked: 0,
            max_rel_error: 0.0,
            worst: String::new(),
        }
    }

    fn record(&mut self, what: impl FnOnce() -> String, analytic: f64, numeric: f64) {
        self.checked += 1;
        let e = relative_error(analytic, numeric);
        if e > self.max_rel_error || self.worst.is_empty() {
            self.max_rel_error = self.max_rel_error.max(e);
            self.worst = format!("{} (analytic {analytic:e}, numeric {numeric:e})", what());
        }
    }

    pub fn merge(&mut self, other: GradCheckReport) {
        self.checked += other.checked;
        if other.max_rel_error >= self.max_rel_error {
            self.max_rel_error = other.max_rel_error;
            self.worst = other.worst;
        }
    }
}

/// Compare `analytic` against central differences of `f` around `x` at the
/// given coordinates.
pub fn check_coordinates(
    x: &[f64],
    analytic: &[f64],
    coords: &[usize],
    step: f64,
    label: &str,
    mut f: impl FnMut(&[f64]) -> f64,
) -> GradCheckReport {
    let mut report = GradCheckReport::new();
    let mut probe = x.to_vec();
    for &i in coords {
        let orig = probe[i];
        probe[i] = orig + step;
        let up = f(&probe);
        probe[i] = orig - step;
        let down = f(&probe);
        probe[i] = orig;
        let numeric = (up - down) / (2.0 * step);
        report.record(|| format!("{label}[{i}]"), analytic[i], numeric);
    }
    report
}

/// Pick `n` distinct coordinates out of `len` (all of them when `n >= len`).
pub fn sample_coords<R: Rng>(rng: &mut R, len: usize, n: usize) -> Vec<usize> {
    if n >= len {
        (0..len).collect()
    } else {
        rand::seq::index::sample(rng, len, n).into_vec()
    }
}

/// Spot-check a whole network: `points` random parameter coordinates plus
/// `points` random input coordinates. `loss` maps the network output to a
/// scalar and its gradient. The network runs in eval mode.
pub fn check_network(
    net: &mut Network,
    x: &Tensor,
    loss: &dyn Fn(&Tensor) -> Result<(f64, Tensor)>,
    points: usize,
    step: f64,
    seed: u64,
) -> Result<GradCheckReport> {
    let mut rng = seed::rng_for(seed, "gradcheck");
    let out = net.forward(x.clone(), Mode::Eval)?;
    let (_, gout) = loss(&out)?;
    let gx = net.backward(gout)?;
    let grads: Vec<(String, Tensor)> = net
        .params_and_grads()
        .into_iter()
        .map(|(n, _, g)| (n, g.clone()))
        .collect();

    let eval = |net: &mut Network, x: &Tensor| -> f64 {
        let out = net.forward(x.clone(), Mode::Eval).expect("forward");
        loss(&out).expect("loss").0
    };

    let mut report = GradCheckReport::new();
    let total: usize = grads.iter().map(|(_, g)| g.len()).sum();
    for flat in sample_coords(&mut rng, total, points) {
        let (mut k, mut off) = (0, flat);
        while off >= grads[k].1.len() {
            off -= grads[k].1.len();
            k += 1;
        }
        let analytic = grads[k].1.data()[off];
        let set = |net: &mut Network, v: Option<f64>, orig: f64| {
            let mut items = net.params_and_grads();
            let p = &mut items[k].1;
            p.data_mut()[off] = v.unwrap_or(orig);
        };
        let orig = net.params_and_grads()[k].1.data()[off];
        set(net, Some(orig + step), orig);
        let up = eval(net, x);
        set(net, Some(orig - step), orig);
        let down = eval(net, x);
        set(net, None, orig);
        let numeric = (up - down) / (2.0 * step);
        report.record(|| format!("{}[{off}]", grads[k].0), analytic, numeric);
    }

    let coords = sample_coords(&mut rng, x.len(), points);
    let input_report = check_coordinates(x.data(), gx.data(), &coords, step, "input", |v| {
        let probe = Tensor::new(x.shape().to_vec(), v.to_vec()).expect("same shape");
        eval(net, &probe)
    });
    report.merge(input_report);
    Ok(report)
}
