//! CART random forest over row vectors (normally the 108-D statistics),
//! with soft voting and mean-decrease-impurity importances.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{MergedLabel, N_CHANNELS};
use crate::error::{Error, Result};
use crate::features::{FeatureVector108, N_FEATURES, N_STATS};
use crate::seed;

/// Smallest impurity decrease that still counts as a split.
const MIN_DECREASE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Candidate features drawn per node; clamped to the row width.
    pub features_per_split: usize,
    pub min_samples_split: usize,
    /// Draw each tree's rows with replacement. Off only in tests.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: 20,
            features_per_split: 10,
            min_samples_split: 2,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("n_trees must be at least 1".into()));
        }
        if self.max_depth == 0 {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        if self.features_per_split == 0 || self.features_per_split > N_FEATURES {
            return Err(Error::Config(format!(
                "features_per_split must lie in 1..={N_FEATURES}"
            )));
        }
        if self.min_samples_split < 2 {
            return Err(Error::Config("min_samples_split must be at least 2".into()));
        }
        Ok(())
    }
}

pub fn gini(counts: [usize; 3]) -> Result<f64> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyInput("gini of an empty node".into()));
    }
    Ok(gini_unchecked(counts))
}

fn gini_unchecked(counts: [usize; 3]) -> f64 {
    let total = counts.iter().sum::<usize>() as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            p * p
        })
        .sum::<f64>()
}

fn count_labels(labels: &[MergedLabel], rows: &[usize]) -> [usize; 3] {
    let mut c = [0; 3];
    for &r in rows {
        c[labels[r].index()] += 1;
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub impurity_decrease: f64,
}

/// Best Gini split of `rows` over `candidates`, thresholds at midpoints of
/// consecutive distinct values (`x <= threshold` goes left). Ties keep the
/// lowest feature index, then the lowest threshold.
pub fn best_split(
    features: &[Vec<f64>],
    labels: &[MergedLabel],
    rows: &[usize],
    candidates: &[usize],
) -> Option<Split> {
    if rows.len() < 2 {
        return None;
    }
    let parent = count_labels(labels, rows);
    let parent_gini = gini_unchecked(parent);
    if parent_gini == 0.0 {
        return None;
    }
    let n = rows.len() as f64;
    let mut sorted_candidates = candidates.to_vec();
    sorted_candidates.sort_unstable();
    sorted_candidates.dedup();

    let mut best: Option<Split> = None;
    let mut order: Vec<(f64, MergedLabel)> = Vec::with_capacity(rows.len());
    for &f in &sorted_candidates {
        order.clear();
        order.extend(rows.iter().map(|&r| (features[r][f], labels[r])));
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = [0usize; 3];
        for i in 0..order.len() - 1 {
            left[order[i].1.index()] += 1;
            let (v, next) = (order[i].0, order[i + 1].0);
            if v == next {
                continue;
            }
            let right = [parent[0] - left[0], parent[1] - left[1], parent[2] - left[2]];
            let nl = (i + 1) as f64;
            let decrease = parent_gini
                - nl / n * gini_unchecked(left)
                - (n - nl) / n * gini_unchecked(right);
            if decrease > MIN_DECREASE && best.map_or(true, |b| decrease > b.impurity_decrease) {
                let mut threshold = 0.5 * (v + next);
                if threshold >= next {
                    threshold = v;
                }
                best = Some(Split {
                    feature: f,
                    threshold,
                    impurity_decrease: decrease,
                });
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        n_samples: usize,
        impurity_decrease: f64,
    },
    Leaf {
        class_counts: [usize; 3],
    },
}

/// Flat node array, root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    fn leaf_for(&self, x: &[f64]) -> [usize; 3] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { class_counts } => return *class_counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> [f64; 3] {
        let c = self.leaf_for(x);
        let total = c.iter().sum::<usize>() as f64;
        [c[0] as f64 / total, c[1] as f64 / total, c[2] as f64 / total]
    }

    /// Edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            walk(&self.nodes, 0)
        }
    }

    /// Training rows reaching node `i`.
    pub fn node_samples(&self, i: usize) -> usize {
        match &self.nodes[i] {
            Node::Split { n_samples, .. } => *n_samples,
            Node::Leaf { class_counts } => class_counts.iter().sum(),
        }
    }
}

struct TreeBuilder<'a, R> {
    features: &'a [Vec<f64>],
    labels: &'a [MergedLabel],
    config: &'a ForestConfig,
    n_candidates: usize,
    rng: R,
    nodes: Vec<Node>,
}

impl<R: Rng> TreeBuilder<'_, R> {
    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let counts = count_labels(self.labels, &rows);
        self.nodes.push(Node::Leaf { class_counts: counts });
        if depth >= self.config.max_depth || rows.len() < self.config.min_samples_split {
            return id;
        }
        let width = self.features[rows[0]].len();
        let candidates = index::sample(&mut self.rng, width, self.n_candidates).into_vec();
        let Some(split) = best_split(self.features, self.labels, &rows, &candidates) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&row| self.features[row][split.feature] <= split.threshold);
        let n_samples = rows.len();
        drop(rows);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
            n_samples,
            impurity_decrease: split.impurity_decrease,
        };
        id
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub config: ForestConfig,
    pub n_features: usize,
    pub trees: Vec<DecisionTree>,
}

/// Importances per feature slot and summed per channel, each summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub per_feature: Vec<f64>,
    pub per_channel: Vec<f64>,
}

impl ImportanceReport {
    /// Channel indices sorted by decreasing importance.
    pub fn channel_ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.per_channel.len()).collect();
        idx.sort_by(|&a, &b| self.per_channel[b].total_cmp(&self.per_channel[a]).then(a.cmp(&b)));
        idx
    }
}

pub fn fit_forest(
    features: &[Vec<f64>],
    labels: &[MergedLabel],
    config: &ForestConfig,
) -> Result<RandomForest> {
    config.validate()?;
    if features.is_empty() {
        return Err(Error::EmptyInput("forest needs training rows".into()));
    }
    if features.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} rows but {} labels",
            features.len(),
            labels.len()
        )));
    }
    let width = features[0].len();
    if width == 0 || features.iter().any(|r| r.len() != width) {
        return Err(Error::Shape("forest rows must share one non-zero width".into()));
    }
    let n = features.len();
    let trees = (0..config.n_trees)
        .map(|t| {
            let mut rng = seed::rng(seed::derive_indexed(config.seed, "forest-tree", t as u64));
            let rows: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut b = TreeBuilder {
                features,
                labels,
                config,
                n_candidates: config.features_per_split.min(width),
                rng,
                nodes: Vec::new(),
            };
            b.build(rows, 0);
            DecisionTree { nodes: b.nodes }
        })
        .collect();
    Ok(RandomForest {
        config: config.clone(),
        n_features: width,
        trees,
    })
}

pub fn fit_forest_vectors(train: &[FeatureVector108], config: &ForestConfig) -> Result<RandomForest> {
    let x: Vec<Vec<f64>> = train.iter().map(|f| f.values.clone()).collect();
    let y: Vec<MergedLabel> = train.iter().map(|f| f.label).collect();
    fit_forest(&x, &y, config)
}

impl RandomForest {
    fn check_fitted(&self) -> Result<()> {
        if self.trees.is_empty() || self.trees.iter().any(|t| t.nodes.is_empty()) {
            return Err(Error::NotFitted("forest has no trained trees".into()));
        }
        Ok(())
    }

    /// Mean of the trees' leaf class frequencies.
    pub fn predict_proba(&self, x: &[f64]) -> Result<[f64; 3]> {
        self.check_fitted()?;
        if x.len() != self.n_features {
            return Err(Error::Shape(format!(
                "forest expects {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        let mut p = [0.0; 3];
        for t in &self.trees {
            let q = t.predict_proba(x);
            for k in 0..3 {
                p[k] += q[k];
            }
        }
        let total: f64 = p.iter().sum();
        Ok([p[0] / total, p[1] / total, p[2] / total])
    }

    pub fn predict_proba_all(&self, rows: &[Vec<f64>]) -> Result<Vec<[f64; 3]>> {
        rows.iter().map(|r| self.predict_proba(r)).collect()
    }

    /// Mean decrease in impurity. Within a tree each split contributes its
    /// impurity decrease weighted by the share of the tree's rows reaching
    /// it; trees are averaged and the result normalized to sum 1. Per
    /// channel importance sums the six statistic slots of a channel and is
    /// only filled for 108-wide forests.
    pub fn feature_importance(&self) -> Result<ImportanceReport> {
        self.check_fitted()?;
        let mut imp = vec![0.0; self.n_features];
        for t in &self.trees {
            let root = t.node_samples(0) as f64;
            for node in &t.nodes {
                if let Node::Split {
                    feature,
                    n_samples,
                    impurity_decrease,
                    ..
                } = node
                {
                    imp[*feature] += *n_samples as f64 / root * impurity_decrease;
                }
            }
        }
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            imp.iter_mut().for_each(|v| *v /= total);
        } else {
            // No tree ever split: no feature is preferred.
            let u = 1.0 / self.n_features as f64;
            imp.iter_mut().for_each(|v| *v = u);
        }
        let per_channel = if self.n_features == N_FEATURES {
            let mut ch: Vec<f64> = imp.chunks(N_STATS).map(|c| c.iter().sum()).collect();
            let s: f64 = ch.iter().sum();
            ch.iter_mut().for_each(|v| *v /= s);
            debug_assert_eq!(ch.len(), N_CHANNELS);
            ch
        } else {
            Vec::new()
        };
        Ok(ImportanceReport {
            per_feature: imp,
            per_channel,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: RandomForest = serde_json::from_str(text)?;
        f.check_fitted()?;
        Ok(f)
    }
}
