//! Tune class thresholds on validation scores and compare decision rules.

use drowsy::dataset::MergedLabel;
use drowsy::eval::{evaluate, roc_curve, tune_pair, Objective};
use rand::Rng;

/// Scores from a weak model that under-calls the drowsy classes.
fn scored(n: usize, seed: u64) -> (Vec<[f64; 3]>, Vec<MergedLabel>) {
    let mut rng = drowsy::seed::rng(seed);
    (0..n)
        .map(|i| {
            let label = MergedLabel::ALL[[0, 0, 0, 1, 2][i % 5]];
            let mut v = [1.2, 0.2, 0.2];
            v[label.index()] += 0.5;
            for x in &mut v {
                *x *= rng.gen_range(0.3..1.7);
            }
            let t: f64 = v.iter().sum();
            ([v[0] / t, v[1] / t, v[2] / t], label)
        })
        .unzip()
}

fn main() -> drowsy::Result<()> {
    let (val_s, val_l) = scored(500, 1);
    let (test_s, test_l) = scored(500, 2);

    let roc = roc_curve(
        &val_s.iter().map(|s| s[2]).collect::<Vec<_>>(),
        &val_l.iter().map(|&l| l == MergedLabel::ModExt).collect::<Vec<_>>(),
    )?;
    println!("modext ROC has {} points", roc.thresholds.len());

    for objective in [Objective::Youden, Objective::Literal] {
        let t = tune_pair(&val_s, &val_l, objective)?;
        let before = evaluate("argmax", &test_s, &test_l, None)?;
        let after = evaluate("tuned", &test_s, &test_l, Some(t))?;
        println!(
            "{objective:?}: t_slight {:.3} t_modext {:.3}\n  recall argmax {:?}\n  recall tuned  {:?}",
            t.t_slight,
            t.t_modext,
            before.per_class_recall.map(|r| (r * 1000.0).round() / 1000.0),
            after.per_class_recall.map(|r| (r * 1000.0).round() / 1000.0)
        );
    }
    Ok(())
}
