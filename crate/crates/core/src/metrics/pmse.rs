//! Propensity-score mean squared error.
//!
//! Real and synthetic rows are stacked with an indicator (1 = synthetic) and a
//! first-order logistic model predicts the indicator from one-hot encoded
//! cells (categories, or bins for continuous columns; first level dropped).
//! With `c` the synthetic fraction and `N` the stacked size,
//! `pmse = mean((p_i - c)^2)` and the null expectation for a model with `k`
//! parameters is `(k - 1) (1 - c)^2 c / N`.

use serde::{Deserialize, Serialize};

use crate::classifiers::solver::{fit_logistic, predict_probability, SparseRow};
use crate::error::{Error, Result};
use crate::tabular::TabularDataset;

const PROPENSITY_LAMBDA: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropensityModel {
    #[default]
    Logistic,
    /// Predicts `c` for every row (zero-feature ablation).
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropensityReport {
    pub pmse: f64,
    pub null_expectation: f64,
    pub ratio: f64,
    pub synthetic_fraction: f64,
    /// Parameter count of the logistic propensity model (intercept included).
    pub parameters: usize,
}

/// Sparse one-hot design matrix (intercept at index 0) and parameter count.
pub fn propensity_design(d: &TabularDataset) -> (Vec<SparseRow>, usize) {
    let columns = d.schema().columns();
    let mut offsets = Vec::with_capacity(columns.len());
    let mut k = 1;
    for c in columns {
        offsets.push(k);
        k += c.cells() - 1;
    }
    let rows = d
        .rows()
        .iter()
        .map(|r| {
            let mut x = vec![(0, 1.0)];
            for ((c, &v), &off) in columns.iter().zip(r).zip(&offsets) {
                let cell = c.cell_of(v);
                if cell > 0 {
                    x.push((off + cell - 1, 1.0));
                }
            }
            x
        })
        .collect();
    (rows, k)
}

pub fn pmse_ratio(real: &TabularDataset, synthetic: &TabularDataset) -> Result<PropensityReport> {
    pmse_ratio_with(real, synthetic, PropensityModel::Logistic)
}

pub fn pmse_ratio_with(
    real: &TabularDataset,
    synthetic: &TabularDataset,
    model: PropensityModel,
) -> Result<PropensityReport> {
    real.check_same_schema(synthetic)?;
    if real.is_empty() || synthetic.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (mut rows, k) = propensity_design(real);
    let (synth_rows, _) = propensity_design(synthetic);
    let mut labels = vec![false; rows.len()];
    labels.extend(std::iter::repeat(true).take(synth_rows.len()));
    rows.extend(synth_rows);

    let n = rows.len() as f64;
    let c = synthetic.n_rows() as f64 / n;
    let pmse = match model {
        PropensityModel::Constant => 0.0,
        PropensityModel::Logistic => {
            let w = fit_logistic(&rows, &labels, k, PROPENSITY_LAMBDA, 1e-9, 100);
            rows.iter()
                .map(|r| (predict_probability(&w, r) - c).powi(2))
                .sum::<f64>()
                / n
        }
    };
    let null_expectation = (k as f64 - 1.0) * (1.0 - c).powi(2) * c / n;
    let ratio = if null_expectation > 0.0 {
        pmse / null_expectation
    } else {
        0.0
    };
    Ok(PropensityReport {
        pmse,
        null_expectation,
        ratio,
        synthetic_fraction: c,
        parameters: k,
    })
}
