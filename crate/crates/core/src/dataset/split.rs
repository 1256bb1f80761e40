use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::SampleDescriptor;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub n_test_participants: usize,
    /// Share of the non-test samples that should land in validation (3:1 → 0.25).
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            n_test_participants: 10,
            val_fraction: 0.25,
            seed: 0,
        }
    }
}

/// Which side of the participant split a sample set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Train,
    Validation,
    Test,
}

impl Partition {
    pub fn name(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Validation => "val",
            Partition::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<SampleDescriptor>,
    pub val: Vec<SampleDescriptor>,
    pub test: Vec<SampleDescriptor>,
}

fn participants(samples: &[SampleDescriptor]) -> BTreeSet<&str> {
    samples.iter().map(|s| s.participant_id.as_str()).collect()
}

impl DatasetSplit {
    pub fn train_participants(&self) -> BTreeSet<&str> {
        participants(&self.train)
    }
    pub fn val_participants(&self) -> BTreeSet<&str> {
        participants(&self.val)
    }
    pub fn test_participants(&self) -> BTreeSet<&str> {
        participants(&self.test)
    }

    /// Participants appearing in more than one split.
    pub fn overlaps(&self) -> Vec<String> {
        let (a, b, c) = (
            self.train_participants(),
            self.val_participants(),
            self.test_participants(),
        );
        let mut shared: BTreeSet<&str> = BTreeSet::new();
        shared.extend(a.intersection(&b));
        shared.extend(a.intersection(&c));
        shared.extend(b.intersection(&c));
        shared.into_iter().map(String::from).collect()
    }
}

/// Hold out whole participants for test, then divide the remaining
/// participants so validation gets as close to `val_fraction` of the
/// remaining samples as participant granularity allows.
pub fn split_by_participant(
    samples: Vec<SampleDescriptor>,
    config: &SplitConfig,
) -> Result<DatasetSplit> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for s in &samples {
        *counts.entry(s.participant_id.clone()).or_default() += 1;
    }
    let n_test = config.n_test_participants;
    if counts.len() < n_test + 2 {
        return Err(Error::Config(format!(
            "{} participants cannot fill {n_test} test participants plus train and validation",
            counts.len()
        )));
    }
    if !(0.0..1.0).contains(&config.val_fraction) {
        return Err(Error::Config("val_fraction must lie in [0, 1)".into()));
    }

    let mut roster: Vec<String> = counts.keys().cloned().collect();
    roster.shuffle(&mut seed::rng_for(config.seed, "split"));
    let test: BTreeSet<String> = roster[..n_test].iter().cloned().collect();
    let rest: Vec<(String, usize)> = roster[n_test..]
        .iter()
        .map(|p| (p.clone(), counts[p]))
        .collect();
    let val = choose_validation(&rest, config.val_fraction);

    let mut split = DatasetSplit::default();
    for s in samples {
        if test.contains(&s.participant_id) {
            split.test.push(s);
        } else if val.contains(&s.participant_id) {
            split.val.push(s);
        } else {
            split.train.push(s);
        }
    }
    Ok(split)
}

/// Subset-sum over participant sample counts: the non-empty proper subset
/// whose total is closest to the target. Ties go to the smaller total, then
/// to the subset found first in roster order.
fn choose_validation(rest: &[(String, usize)], fraction: f64) -> BTreeSet<String> {
    let total: usize = rest.iter().map(|(_, c)| c).sum();
    let target = fraction * total as f64;
    // reach[k][s]: sum s reachable using the first k participants.
    let mut reach = vec![vec![false; total + 1]; rest.len() + 1];
    reach[0][0] = true;
    for (k, (_, c)) in rest.iter().enumerate() {
        for s in 0..=total {
            if reach[k][s] {
                reach[k + 1][s] = true;
                reach[k + 1][s + c] = true;
            }
        }
    }
    let best = (1..total)
        .filter(|&s| reach[rest.len()][s])
        .min_by(|&a, &b| {
            let da = (a as f64 - target).abs();
            let db = (b as f64 - target).abs();
            da.total_cmp(&db).then(a.cmp(&b))
        })
        .unwrap_or(rest.first().map(|(_, c)| *c).unwrap_or(0));

    let mut chosen = BTreeSet::new();
    let mut s = best;
    for k in (0..rest.len()).rev() {
        let c = rest[k].1;
        // Prefer leaving participant k out when the sum is reachable without it.
        if reach[k][s] {
            continue;
        }
        chosen.insert(rest[k].0.clone());
        s -= c;
    }
    chosen
}
