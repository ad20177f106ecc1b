//! CART decision trees (Gini impurity) and bagged random forests.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FeatureBounds, ModelKind, ModelParams, TrainedClassifier, TrainingSet};
use crate::error::{Error, Result};
use crate::mechanisms::Rng;
use crate::tabular::TabularDataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features examined per split; `None` means all.
    pub max_features: Option<usize>,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: None,
            min_samples_split: 2,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features examined per split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 20,
            max_depth: Some(12),
            min_samples_split: 2,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        distribution: Vec<f64>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_distribution(&self, row: &[f64]) -> &[f64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { distribution } => return distribution,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

/// Best Gini split of `indices` on `feature`, scored by
/// `sum_left c^2 / n_left + sum_right c^2 / n_right` (higher is purer).
fn best_split_on(
    x: &[Vec<f64>],
    y: &[usize],
    indices: &[usize],
    feature: usize,
    n_classes: usize,
    totals: &[usize],
) -> Option<(f64, f64)> {
    let mut order: Vec<(f64, usize)> = indices.iter().map(|&i| (x[i][feature], y[i])).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    if order[0].0 == order[order.len() - 1].0 {
        return None;
    }
    let n = order.len();
    let mut left = vec![0usize; n_classes];
    let mut right = totals.to_vec();
    let mut left_sq = 0.0;
    let mut right_sq: f64 = right.iter().map(|&c| (c * c) as f64).sum();
    let mut best: Option<(f64, f64)> = None;
    for i in 0..n - 1 {
        let c = order[i].1;
        left_sq += (2 * left[c] + 1) as f64;
        right_sq -= (2 * right[c] - 1) as f64;
        left[c] += 1;
        right[c] -= 1;
        if order[i].0 == order[i + 1].0 {
            continue;
        }
        let nl = (i + 1) as f64;
        let nr = (n - i - 1) as f64;
        let score = left_sq / nl + right_sq / nr;
        if best.map_or(true, |(s, _)| score > s) {
            let mid = 0.5 * (order[i].0 + order[i + 1].0);
            let threshold = if mid < order[i + 1].0 { mid } else { order[i].0 };
            best = Some((score, threshold));
        }
    }
    best
}

fn grow(
    x: &[Vec<f64>],
    y: &[usize],
    root: Vec<usize>,
    n_classes: usize,
    cfg: &TreeConfig,
    rng: &mut Rng,
) -> Tree {
    let d = x.first().map_or(0, |r| r.len());
    let mtry = cfg.max_features.unwrap_or(d).clamp(1, d.max(1));
    let mut nodes: Vec<Node> = Vec::new();
    // (indices, depth, slot)
    let mut stack = vec![(root, 0usize, 0usize)];
    nodes.push(Node::Leaf {
        distribution: Vec::new(),
    });
    while let Some((indices, depth, slot)) = stack.pop() {
        let mut totals = vec![0usize; n_classes];
        for &i in &indices {
            totals[y[i]] += 1;
        }
        let n = indices.len();
        let distribution: Vec<f64> = totals.iter().map(|&c| c as f64 / n as f64).collect();
        let pure = totals.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = cfg.max_depth.map_or(false, |m| depth >= m);
        if pure || depth_capped || n < cfg.min_samples_split || d == 0 {
            nodes[slot] = Node::Leaf { distribution };
            continue;
        }

        let mut features: Vec<usize> = (0..d).collect();
        if mtry < d {
            features.shuffle(rng);
        }
        let mut best: Option<BestSplit> = None;
        for (examined, &f) in features.iter().enumerate() {
            if examined >= mtry && best.is_some() {
                break;
            }
            if let Some((score, threshold)) = best_split_on(x, y, &indices, f, n_classes, &totals) {
                if best.as_ref().map_or(true, |b| score > b.score) {
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        score,
                    });
                }
            }
        }
        let Some(split) = best else {
            nodes[slot] = Node::Leaf { distribution };
            continue;
        };
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| x[i][split.feature] <= split.threshold);
        let left = nodes.len();
        nodes.push(Node::Leaf {
            distribution: Vec::new(),
        });
        let right = nodes.len();
        nodes.push(Node::Leaf {
            distribution: Vec::new(),
        });
        nodes[slot] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        stack.push((right_idx, depth + 1, right));
        stack.push((left_idx, depth + 1, left));
    }
    Tree { nodes }
}

fn check_trainable(ts: &TrainingSet) -> Result<()> {
    if ts.x.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(())
}

pub fn fit_decision_tree(train: &TabularDataset, cfg: &TreeConfig, seed: u64) -> Result<TrainedClassifier> {
    let ts = TrainingSet::from_dataset(train)?;
    check_trainable(&ts)?;
    let mut rng = Rng::new(seed);
    let tree = grow(&ts.x, &ts.y, (0..ts.x.len()).collect(), ts.n_classes, cfg, &mut rng);
    Ok(TrainedClassifier {
        kind: ModelKind::DecisionTree,
        feature_names: ts.feature_names,
        bounds: FeatureBounds::from_schema(train),
        n_classes: ts.n_classes,
        params: ModelParams::Tree(tree),
    })
}

/// Bagged CART trees with per-split feature subsampling. Each tree draws its
/// bootstrap sample and feature subsets from its own child stream, so the
/// forest is identical however the trees are scheduled.
pub fn fit_random_forest(train: &TabularDataset, cfg: &ForestConfig, seed: u64) -> Result<TrainedClassifier> {
    let ts = TrainingSet::from_dataset(train)?;
    check_trainable(&ts)?;
    if cfg.n_trees == 0 {
        return Err(Error::NonPositiveParameter {
            name: "n_trees",
            value: 0.0,
        });
    }
    let d = ts.feature_names.len();
    let tree_cfg = TreeConfig {
        max_depth: cfg.max_depth,
        min_samples_split: cfg.min_samples_split,
        max_features: Some(
            cfg.max_features
                .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize),
        ),
    };
    let root = Rng::new(seed);
    let n = ts.x.len();
    let trees: Vec<Tree> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = root.child_indexed("tree", t as u64);
            let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            grow(&ts.x, &ts.y, sample, ts.n_classes, &tree_cfg, &mut rng)
        })
        .collect();
    Ok(TrainedClassifier {
        kind: ModelKind::RandomForest,
        feature_names: ts.feature_names,
        bounds: FeatureBounds::from_schema(train),
        n_classes: ts.n_classes,
        params: ModelParams::Forest { trees },
    })
}
