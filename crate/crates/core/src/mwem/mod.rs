//! MWEM: multiplicative weights with exponential-mechanism query selection.
//!
//! The synthesizer keeps a histogram over the discretized domain, starting
//! from the uniform distribution scaled to the record count. Each of `T`
//! iterations spends `epsilon / T`: one part selects the workload query the
//! current histogram answers worst (exponential mechanism, sensitivity 1),
//! the other measures that query on the real data (Laplace, sensitivity 1).
//! The measurement, clamped to `[0, n]`, then drives a multiplicative
//! weights update. As in the original MWEM practice, updates are replayed
//! over every measurement taken so far for `update_passes` rounds.

mod workload;

pub use workload::{build_workload, ColumnPredicate, LinearQuery};

use rand::distributions::{Distribution, WeightedIndex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::{exponential_choice, laplace, BudgetLedger, PrivacyBudget, Rng};
use crate::tabular::{discretize, DiscretizedView, Schema, TabularDataset, MAX_FLAT_CELLS};

fn default_iterations() -> usize {
    30
}
fn default_queries() -> usize {
    200
}
fn default_select_fraction() -> f64 {
    0.5
}
fn default_update_passes() -> usize {
    20
}
fn default_max_cells() -> u64 {
    MAX_FLAT_CELLS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MwemConfig {
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_queries")]
    pub queries_per_workload: usize,
    /// Fixed workload seed; when absent the workload stream is derived from
    /// the fit's Rng.
    #[serde(default)]
    pub workload_seed: Option<u64>,
    /// Share of each iteration's epsilon spent on query selection; the rest
    /// goes to measurement.
    #[serde(default = "default_select_fraction")]
    pub select_fraction: f64,
    /// Rounds of multiplicative-weights replay over past measurements.
    #[serde(default = "default_update_passes")]
    pub update_passes: usize,
    #[serde(default = "default_max_cells")]
    pub max_cells: u64,
}

impl Default for MwemConfig {
    fn default() -> Self {
        MwemConfig {
            iterations: default_iterations(),
            queries_per_workload: default_queries(),
            workload_seed: None,
            select_fraction: default_select_fraction(),
            update_passes: default_update_passes(),
            max_cells: default_max_cells(),
        }
    }
}

impl MwemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::NonPositiveParameter {
                name: "iterations",
                value: 0.0,
            });
        }
        if self.queries_per_workload == 0 {
            return Err(Error::NonPositiveParameter {
                name: "queries_per_workload",
                value: 0.0,
            });
        }
        if !(self.select_fraction > 0.0 && self.select_fraction < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "select_fraction must lie in (0, 1), got {}",
                self.select_fraction
            )));
        }
        if self.update_passes == 0 {
            return Err(Error::NonPositiveParameter {
                name: "update_passes",
                value: 0.0,
            });
        }
        Ok(())
    }
}

/// Nonnegative weights over the flat domain, summing to `total_mass`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramDistribution {
    weights: Vec<f64>,
    total_mass: f64,
}

impl HistogramDistribution {
    pub fn uniform(cells: usize, total_mass: f64) -> Self {
        HistogramDistribution {
            weights: vec![total_mass / cells as f64; cells],
            total_mass,
        }
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidSpec("histogram weights must be >= 0".into()));
        }
        let total_mass: f64 = weights.iter().sum();
        if !(total_mass > 0.0) {
            return Err(Error::InvalidSpec("histogram mass must be positive".into()));
        }
        Ok(HistogramDistribution {
            weights,
            total_mass,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn answer(&self, cells: &[u32]) -> f64 {
        cells.iter().map(|&c| self.weights[c as usize]).sum()
    }

    /// One multiplicative-weights step toward `measurement` on `cells`,
    /// followed by renormalisation to the total mass.
    fn update(&mut self, cells: &[u32], measurement: f64) {
        let error = measurement - self.answer(cells);
        let factor = (error / (2.0 * self.total_mass)).exp();
        for &c in cells {
            self.weights[c as usize] *= factor;
        }
        let scale = self.total_mass / self.mass();
        for w in &mut self.weights {
            *w *= scale;
        }
    }

    /// Debug export `{cells, weights, total_mass}` with per-column cell coordinates.
    pub fn export(&self, view: &DiscretizedView) -> serde_json::Value {
        let cells: Vec<Vec<usize>> = (0..self.weights.len())
            .map(|i| view.cells_of_index(i))
            .collect();
        serde_json::json!({
            "cells": cells,
            "weights": self.weights,
            "total_mass": self.total_mass,
        })
    }
}

/// State exposed to iteration observers after each MWEM iteration.
#[derive(Debug)]
pub struct IterationTrace<'a> {
    pub iteration: usize,
    pub selected_query: usize,
    pub measurement: f64,
    pub histogram: &'a HistogramDistribution,
}

/// Result of an MWEM fit. The true histogram is not retained.
#[derive(Debug, Clone)]
pub struct MwemFit {
    pub histogram: HistogramDistribution,
    pub view: DiscretizedView,
    pub workload: Vec<LinearQuery>,
    pub target: Option<String>,
    /// Names of the columns the fit read.
    pub columns_observed: Vec<String>,
}

impl MwemFit {
    pub fn sample(&self, n: usize, rng: &mut Rng) -> Result<TabularDataset> {
        let d = mwem_sample(&self.histogram, &self.view, n, rng)?;
        match &self.target {
            Some(t) => d.with_target(Some(t)),
            None => Ok(d),
        }
    }
}

pub fn mwem_fit(
    data: &TabularDataset,
    epsilon: f64,
    config: &MwemConfig,
    ledger: &mut BudgetLedger,
    rng: &mut Rng,
) -> Result<MwemFit> {
    mwem_fit_observed(data, epsilon, config, ledger, rng, |_| {})
}

/// [`mwem_fit`] with a callback invoked after every iteration.
pub fn mwem_fit_observed(
    data: &TabularDataset,
    epsilon: f64,
    config: &MwemConfig,
    ledger: &mut BudgetLedger,
    rng: &mut Rng,
    mut observer: impl FnMut(&IterationTrace<'_>),
) -> Result<MwemFit> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::NonPositiveParameter {
            name: "epsilon",
            value: epsilon,
        });
    }
    config.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let view = DiscretizedView::new(data.schema(), config.max_cells)?;
    let mut workload_rng = match config.workload_seed {
        Some(seed) => Rng::new(seed),
        None => rng.child("workload"),
    };
    let workload = build_workload(&view, config.queries_per_workload, &mut workload_rng)?;
    ledger.spend("mwem", PrivacyBudget::pure(epsilon)?)?;

    let mut select_rng = rng.child("select");
    let mut measure_rng = rng.child("measure");

    let n = data.n_rows() as f64;
    let (_, counts) = discretize(data)?;
    let cells: Vec<Vec<u32>> = workload.iter().map(|q| q.matching_cells(&view)).collect();
    let truth: Vec<f64> = cells
        .iter()
        .map(|cs| cs.iter().map(|&c| counts[c as usize] as f64).sum())
        .collect();
    drop(counts);

    let per_iteration = epsilon / config.iterations as f64;
    let eps_select = per_iteration * config.select_fraction;
    let eps_measure = per_iteration - eps_select;

    let mut hist = HistogramDistribution::uniform(view.size(), n);
    let mut measured: Vec<(usize, f64)> = Vec::with_capacity(config.iterations);
    for iteration in 0..config.iterations {
        let scores: Vec<f64> = cells
            .iter()
            .zip(&truth)
            .map(|(cs, t)| (t - hist.answer(cs)).abs())
            .collect();
        let q = exponential_choice(&scores, 1.0, eps_select, &mut select_rng)?;
        let measurement = laplace(truth[q], 1.0, eps_measure, &mut measure_rng)?.clamp(0.0, n);
        measured.push((q, measurement));
        for _ in 0..config.update_passes {
            for &(j, m) in &measured {
                hist.update(&cells[j], m);
            }
        }
        observer(&IterationTrace {
            iteration,
            selected_query: q,
            measurement,
            histogram: &hist,
        });
    }

    Ok(MwemFit {
        histogram: hist,
        view,
        workload,
        target: data.target().map(str::to_owned),
        columns_observed: data.schema().names().iter().map(|s| s.to_string()).collect(),
    })
}

/// Draws `n` rows i.i.d. from the histogram, materialising each cell at its
/// representative (category code or bin midpoint). Pure post-processing.
pub fn mwem_sample(
    hist: &HistogramDistribution,
    view: &DiscretizedView,
    n: usize,
    rng: &mut Rng,
) -> Result<TabularDataset> {
    if hist.weights().len() != view.size() {
        return Err(Error::LengthMismatch {
            expected: view.size(),
            actual: hist.weights().len(),
        });
    }
    let schema: Schema = view.schema().clone();
    if n == 0 {
        return TabularDataset::empty(schema, None);
    }
    let dist = WeightedIndex::new(hist.weights())
        .map_err(|e| Error::InvalidSpec(format!("histogram cannot be sampled: {e}")))?;
    let rows = (0..n)
        .map(|_| view.representative(dist.sample(rng)))
        .collect();
    TabularDataset::new(schema, rows, None)
}
