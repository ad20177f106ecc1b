//! Logistic regression, private (output perturbation) and non-private.
//!
//! Features are min-max scaled with the clipping bounds, an intercept
//! feature is appended, and the vector is divided by `sqrt(d + 1)` so every
//! row lies in the unit ball. The private variant trains the regularised
//! model to convergence and adds a noise vector with density proportional to
//! `exp(-|b| / scale)`, `scale = 2 / (n * lambda * epsilon)`: its norm is
//! Gamma(dim, scale) distributed and its direction uniform.

use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use super::solver::{fit_logistic, predict_probability, SparseRow};
use super::{FeatureBounds, ModelKind, ModelParams, TrainedClassifier, TrainingSet};
use crate::error::{Error, Result};
use crate::mechanisms::Rng;
use crate::tabular::TabularDataset;

const BASELINE_LAMBDA: f64 = 1e-4;

/// Scaled feature vector (with intercept) on the unit ball.
pub fn scale_row(row: &[f64], bounds: &FeatureBounds) -> Vec<f64> {
    let norm = ((row.len() + 1) as f64).sqrt();
    row.iter()
        .enumerate()
        .map(|(i, &v)| {
            let (l, u) = bounds.get(i);
            (v.clamp(l, u) - l) / (u - l) / norm
        })
        .chain(std::iter::once(1.0 / norm))
        .collect()
}

fn dense(row: Vec<f64>) -> SparseRow {
    row.into_iter().enumerate().collect()
}

/// One-vs-rest weight vectors over scaled features. Two-class models keep a
/// single head for class 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub heads: Vec<Vec<f64>>,
}

impl LinearModel {
    pub fn predict_proba(&self, row: &[f64], bounds: &FeatureBounds) -> Vec<f64> {
        let x = dense(scale_row(row, bounds));
        if self.heads.len() == 1 {
            let p = predict_probability(&self.heads[0], &x);
            return vec![1.0 - p, p];
        }
        let scores: Vec<f64> = self
            .heads
            .iter()
            .map(|w| predict_probability(w, &x))
            .collect();
        let z: f64 = scores.iter().sum();
        if z > 0.0 {
            scores.iter().map(|s| s / z).collect()
        } else {
            vec![1.0 / scores.len() as f64; scores.len()]
        }
    }
}

fn head_targets(n_classes: usize) -> Vec<usize> {
    if n_classes == 2 {
        vec![1]
    } else {
        (0..n_classes).collect()
    }
}

fn train_heads(
    ts: &TrainingSet,
    bounds: &FeatureBounds,
    lambda: f64,
    tolerance: f64,
) -> Vec<Vec<f64>> {
    let rows: Vec<SparseRow> = ts.x.iter().map(|r| dense(scale_row(r, bounds))).collect();
    let dim = ts.feature_names.len() + 1;
    head_targets(ts.n_classes)
        .into_iter()
        .map(|k| {
            let labels: Vec<bool> = ts.y.iter().map(|&y| y == k).collect();
            fit_logistic(&rows, &labels, dim, lambda, tolerance, 200)
        })
        .collect()
}

pub fn fit_dp_logreg(
    train: &TabularDataset,
    epsilon: f64,
    bounds: &FeatureBounds,
    lambda: f64,
    rng: &mut Rng,
) -> Result<TrainedClassifier> {
    let ts = TrainingSet::from_dataset(train)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::NonPositiveParameter {
            name: "epsilon",
            value: epsilon,
        });
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::NonPositiveParameter {
            name: "lambda",
            value: lambda,
        });
    }
    if bounds.len() != ts.feature_names.len() {
        return Err(Error::SchemaMismatch(format!(
            "{} bounds for {} features",
            bounds.len(),
            ts.feature_names.len()
        )));
    }
    if ts.x.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let degenerate = (0..ts.feature_names.len())
        .all(|f| ts.x.iter().all(|r| r[f] == ts.x[0][f]));
    if degenerate {
        return Err(Error::DegenerateFeatures);
    }

    let mut heads = train_heads(&ts, bounds, lambda, 1e-10);
    let n = ts.x.len() as f64;
    let eps_head = epsilon / heads.len() as f64;
    let scale = 2.0 / (n * lambda * eps_head);
    let dim = ts.feature_names.len() + 1;
    let norm_dist = Gamma::new(dim as f64, scale)
        .map_err(|e| Error::InvalidSpec(format!("noise distribution: {e}")))?;
    for w in &mut heads {
        let direction: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let len = direction.iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
        let magnitude = norm_dist.sample(rng);
        for (wi, di) in w.iter_mut().zip(&direction) {
            *wi += magnitude * di / len;
        }
    }

    Ok(TrainedClassifier {
        kind: ModelKind::DpLogReg,
        feature_names: ts.feature_names,
        bounds: bounds.clone(),
        n_classes: ts.n_classes,
        params: ModelParams::Linear(LinearModel { heads }),
    })
}

pub fn fit_logistic_baseline(train: &TabularDataset) -> Result<TrainedClassifier> {
    let ts = TrainingSet::from_dataset(train)?;
    let bounds = FeatureBounds::from_schema(train);
    let heads = train_heads(&ts, &bounds, BASELINE_LAMBDA, 1e-8);
    Ok(TrainedClassifier {
        kind: ModelKind::Logistic,
        feature_names: ts.feature_names,
        bounds,
        n_classes: ts.n_classes,
        params: ModelParams::Linear(LinearModel { heads }),
    })
}
