//! SMOTE oversampling of the training split in flattened descriptor space.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{class_counts, MergedLabel, Partition, SampleDescriptor};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig { k_neighbors: 5, seed: 0 }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The `k` nearest points to `points[query]` by Euclidean distance, self
/// excluded, equal distances resolved toward the lower index.
pub fn knn(points: &[&[f64]], query: usize, k: usize) -> Result<Vec<usize>> {
    if points.len() < k + 1 {
        return Err(Error::EmptyInput(format!(
            "knn needs at least {} points, got {}",
            k + 1,
            points.len()
        )));
    }
    if query >= points.len() {
        return Err(Error::Shape(format!("query {query} out of {} points", points.len())));
    }
    let q = points[query];
    let mut d: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != query)
        .map(|(i, p)| (sq_dist(q, p), i))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(d.into_iter().take(k).map(|(_, i)| i).collect())
}

/// `x + lambda * (neighbor - x)` per coordinate.
pub fn interpolate(x: &[f64], neighbor: &[f64], lambda: f64) -> Vec<f64> {
    x.iter().zip(neighbor).map(|(a, b)| a + lambda * (b - a)).collect()
}

/// Oversample every minority class up to the majority count. Originals come
/// first, unchanged; synthetics follow, tagged and numbered by `start_frame`.
pub fn smote_oversample(
    samples: &[SampleDescriptor],
    partition: Partition,
    config: &SmoteConfig,
) -> Result<Vec<SampleDescriptor>> {
    if partition != Partition::Train {
        return Err(Error::Contract(format!(
            "oversampling applies to the training split only, got {}",
            partition.name()
        )));
    }
    if config.k_neighbors == 0 {
        return Err(Error::Config("k_neighbors must be at least 1".into()));
    }
    let counts = class_counts(samples);
    let majority = counts.iter().copied().max().unwrap_or(0);
    let mut out = samples.to_vec();
    let mut next_id = 0u64;
    for label in MergedLabel::ALL {
        let n = counts[label.index()];
        if n == majority {
            continue;
        }
        if n < 2 {
            return Err(Error::MissingClass(format!(
                "class {} has {n} members, oversampling needs at least 2",
                label.name()
            )));
        }
        let members: Vec<&SampleDescriptor> = samples.iter().filter(|s| s.label == label).collect();
        let points: Vec<&[f64]> = members.iter().map(|s| s.grid.as_slice()).collect();
        let k = config.k_neighbors.min(n - 1);
        let mut rng = seed::rng_for(config.seed, &format!("smote-{}", label.name()));
        let mut neighbors: HashMap<usize, Vec<usize>> = HashMap::new();
        for _ in 0..majority - n {
            let parent = rng.gen_range(0..n);
            let nbrs = match neighbors.get(&parent) {
                Some(v) => v,
                None => neighbors.entry(parent).or_insert(knn(&points, parent, k)?),
            };
            let nn = nbrs[rng.gen_range(0..nbrs.len())];
            let lambda: f64 = rng.gen_range(0.0..=1.0);
            let p = members[parent];
            out.push(SampleDescriptor {
                grid: interpolate(points[parent], points[nn], lambda),
                label,
                participant_id: p.participant_id.clone(),
                video_id: p.video_id.clone(),
                start_frame: next_id,
                synthetic: true,
            });
            next_id += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::GRID_LEN;
    use proptest::prelude::*;
    use rand::Rng;

    fn sample(label: MergedLabel, v: f64, i: u64) -> SampleDescriptor {
        let grid = (0..GRID_LEN).map(|j| v + (j % 7) as f64 * 0.1 * v.sin()).collect();
        SampleDescriptor::new(grid, label, format!("p{}", i % 4), "v0", i).unwrap()
    }

    #[test]
    fn collinear_middle_point() {
        let pts: Vec<&[f64]> = vec![&[0.0], &[1.0], &[3.0]];
        assert_eq!(knn(&pts, 1, 1).unwrap(), vec![0]);
    }

    #[test]
    fn equidistant_tie_prefers_lower_index() {
        let pts: Vec<&[f64]> = vec![&[2.0], &[0.0], &[1.0], &[4.0]];
        assert_eq!(knn(&pts, 2, 1).unwrap(), vec![0]);
        let pts: Vec<&[f64]> = vec![&[1.0], &[-1.0], &[0.0]];
        assert_eq!(knn(&pts, 2, 2).unwrap(), vec![0, 1]);
    }

    #[test]
    fn too_few_points() {
        let pts: Vec<&[f64]> = vec![&[0.0], &[1.0]];
        assert!(knn(&pts, 0, 2).is_err());
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = seed::rng(9);
        let data: Vec<Vec<f64>> = (0..50).map(|_| (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let pts: Vec<&[f64]> = data.iter().map(|v| v.as_slice()).collect();
        for q in 0..50 {
            let got = knn(&pts, q, 5).unwrap();
            let mut all: Vec<usize> = (0..50).filter(|&i| i != q).collect();
            all.sort_by(|&a, &b| {
                let da: f64 = data[q].iter().zip(&data[a]).map(|(x, y)| (x - y) * (x - y)).sum();
                let db: f64 = data[q].iter().zip(&data[b]).map(|(x, y)| (x - y) * (x - y)).sum();
                da.partial_cmp(&db).unwrap().then(a.cmp(&b))
            });
            assert_eq!(got, all[..5].to_vec());
        }
    }

    #[test]
    fn half_way_interpolation() {
        let s = interpolate(&[0.0; 4], &[1.0; 4], 0.5);
        assert_eq!(s, vec![0.5; 4]);
    }

    #[test]
    fn equalizes_counts() {
        let mut samples = Vec::new();
        for i in 0..100 {
            samples.push(sample(MergedLabel::Alert, i as f64, i));
        }
        for i in 0..20 {
            samples.push(sample(MergedLabel::Slight, i as f64 * 0.5, 100 + i));
            samples.push(sample(MergedLabel::ModExt, -(i as f64), 200 + i));
        }
        let out = smote_oversample(&samples, Partition::Train, &SmoteConfig::default()).unwrap();
        assert_eq!(class_counts(&out), [100, 100, 100]);
        assert_eq!(&out[..samples.len()], samples.as_slice());
        assert_eq!(out.iter().filter(|s| s.synthetic).count(), 160);
        let again = smote_oversample(&samples, Partition::Train, &SmoteConfig::default()).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn refuses_held_out_splits() {
        let samples = vec![sample(MergedLabel::Alert, 1.0, 0), sample(MergedLabel::Alert, 2.0, 1)];
        for p in [Partition::Validation, Partition::Test] {
            assert!(matches!(
                smote_oversample(&samples, p, &SmoteConfig::default()),
                Err(Error::Contract(_))
            ));
        }
    }

    #[test]
    fn singleton_minority_rejected() {
        let samples = vec![
            sample(MergedLabel::Alert, 1.0, 0),
            sample(MergedLabel::Alert, 2.0, 1),
            sample(MergedLabel::Slight, 3.0, 2),
            sample(MergedLabel::ModExt, 3.0, 3),
            sample(MergedLabel::ModExt, 4.0, 4),
        ];
        assert!(matches!(
            smote_oversample(&samples, Partition::Train, &SmoteConfig::default()),
            Err(Error::MissingClass(_))
        ));
    }

    proptest! {
        #[test]
        fn two_member_class_stays_between(a in -5.0f64..5.0, b in -5.0f64..5.0, seed in any::<u64>()) {
            let samples = vec![
                sample(MergedLabel::Alert, 0.0, 0),
                sample(MergedLabel::Alert, 1.0, 1),
                sample(MergedLabel::Alert, 2.0, 2),
                sample(MergedLabel::Slight, a, 3),
                sample(MergedLabel::Slight, b, 4),
                sample(MergedLabel::ModExt, a, 5),
                sample(MergedLabel::ModExt, b + 0.5, 6),
                sample(MergedLabel::ModExt, a - b, 7),
            ];
            let out = smote_oversample(&samples, Partition::Train, &SmoteConfig { k_neighbors: 5, seed }).unwrap();
            for s in out.iter().filter(|s| s.synthetic) {
                let members: Vec<&SampleDescriptor> = samples.iter().filter(|o| o.label == s.label).collect();
                for (j, v) in s.grid.iter().enumerate() {
                    let lo = members.iter().map(|m| m.grid[j]).fold(f64::INFINITY, f64::min);
                    let hi = members.iter().map(|m| m.grid[j]).fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
                }
            }
        }
    }
}
