//! Differentially private Gaussian naive Bayes.
//!
//! Budget is split evenly three ways: class counts, per-class feature means,
//! and per-class feature variances; the mean and variance shares are divided
//! evenly across features. Classes partition the rows, so statistics of
//! different classes compose in parallel. Class counts are privatised first
//! and floored at one, then used to calibrate the mean sensitivity
//! `(upper - lower) / count` and the variance sensitivity
//! `(upper - lower)^2 / count`. Noisy variances are floored at their own
//! noise scale (post-processing of public quantities).
//!
//! The set of classes is taken from the labels observed in training. Classes
//! that never occur get zero prior mass.

use serde::{Deserialize, Serialize};

use super::{FeatureBounds, ModelKind, ModelParams, TrainedClassifier, TrainingSet};
use crate::error::{Error, Result};
use crate::mechanisms::{laplace_noise, Rng};
use crate::tabular::TabularDataset;

/// Variance smoothing added to every class variance, relative to the widest
/// squared feature range.
pub const GNB_VAR_SMOOTHING: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNbParams {
    pub present: Vec<bool>,
    pub priors: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

impl GaussianNbParams {
    fn joint_log_likelihood(&self, row: &[f64]) -> Vec<f64> {
        (0..self.present.len())
            .map(|k| {
                if !self.present[k] {
                    return f64::NEG_INFINITY;
                }
                let mut ll = self.priors[k].ln();
                for ((x, m), v) in row.iter().zip(&self.means[k]).zip(&self.variances[k]) {
                    ll -= 0.5 * (2.0 * std::f64::consts::PI * v).ln() + (x - m).powi(2) / (2.0 * v);
                }
                ll
            })
            .collect()
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        let jll = self.joint_log_likelihood(row);
        let mut best = self.present.iter().position(|&p| p).unwrap_or(0);
        for (k, &v) in jll.iter().enumerate() {
            if v > jll[best] {
                best = k;
            }
        }
        best
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let jll = self.joint_log_likelihood(row);
        let max = jll.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = jll.iter().map(|&v| (v - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        exps.iter().map(|e| e / z).collect()
    }
}

pub fn fit_dp_gnb(
    train: &TabularDataset,
    epsilon: f64,
    bounds: &FeatureBounds,
    rng: &mut Rng,
) -> Result<TrainedClassifier> {
    let ts = TrainingSet::from_dataset(train)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::NonPositiveParameter {
            name: "epsilon",
            value: epsilon,
        });
    }
    let d = ts.feature_names.len();
    if bounds.len() != d {
        return Err(Error::SchemaMismatch(format!(
            "{} bounds for {} features",
            bounds.len(),
            d
        )));
    }
    if ts.x.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let k = ts.n_classes;
    let eps_counts = epsilon / 3.0;
    let eps_means = epsilon / 3.0 / d.max(1) as f64;
    let eps_vars = eps_means;
    let widest = (0..d)
        .map(|f| {
            let (l, u) = bounds.get(f);
            (u - l).powi(2)
        })
        .fold(0.0, f64::max);
    let smoothing = GNB_VAR_SMOOTHING * widest;

    let mut by_class: Vec<Vec<Vec<f64>>> = vec![Vec::new(); k];
    for (x, &y) in ts.x.iter().zip(&ts.y) {
        by_class[y].push(bounds.clip(x));
    }

    let mut present = vec![false; k];
    let mut counts = vec![0.0; k];
    let mut means = vec![vec![0.0; d]; k];
    let mut variances = vec![vec![smoothing; d]; k];
    for (c, rows) in by_class.iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        present[c] = true;
        let n = rows.len() as f64;
        let noisy_count = (n + laplace_noise(1.0 / eps_counts, rng)).max(1.0);
        counts[c] = noisy_count;
        for f in 0..d {
            let (l, u) = bounds.get(f);
            let range = u - l;
            let mean = rows.iter().map(|r| r[f]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[f] - mean).powi(2)).sum::<f64>() / n;
            let noisy_mean =
                (mean + laplace_noise(range / (noisy_count * eps_means), rng)).clamp(l, u);
            let var_scale = range * range / (noisy_count * eps_vars);
            // a variance below its own noise scale is indistinguishable from
            // noise; flooring there keeps one unlucky draw from silencing a class
            let noisy_var = (var + laplace_noise(var_scale, rng))
                .clamp(var_scale.min(range * range), range * range);
            means[c][f] = noisy_mean;
            variances[c][f] = noisy_var + smoothing;
        }
    }
    let total: f64 = counts.iter().sum();
    let priors = counts.iter().map(|c| c / total).collect();

    Ok(TrainedClassifier {
        kind: ModelKind::DpGnb,
        feature_names: ts.feature_names,
        bounds: bounds.clone(),
        n_classes: k,
        params: ModelParams::GaussianNb(GaussianNbParams {
            present,
            priors,
            means,
            variances,
        }),
    })
}
