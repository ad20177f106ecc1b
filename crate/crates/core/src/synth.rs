//! Synthesizer interface shared by the QUAIL wrapper and the benchmark
//! harness.
//!
//! A [`Synthesizer`] fits on a dataset under a budget and returns a
//! [`FittedSynthesizer`] that samples rows. Only the fit touches private
//! data; sampling is post-processing.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mechanisms::{BudgetLedger, PrivacyBudget, Rng};
use crate::mwem::{mwem_fit, MwemConfig, MwemFit};
use crate::tabular::TabularDataset;

pub trait FittedSynthesizer: Send + Sync {
    /// Draws `n` rows in the schema the synthesizer was fitted on.
    fn sample(&self, n: usize, rng: &mut Rng) -> Result<TabularDataset>;

    /// Columns the fit read from the private data.
    fn columns_observed(&self) -> &[String];
}

pub trait Synthesizer: Send + Sync {
    fn name(&self) -> &'static str;

    /// Fits on `data`, recording the spend of `epsilon` in `ledger`.
    fn fit(
        &self,
        data: &TabularDataset,
        epsilon: f64,
        ledger: &mut BudgetLedger,
        rng: &mut Rng,
    ) -> Result<Box<dyn FittedSynthesizer>>;
}

impl FittedSynthesizer for MwemFit {
    fn sample(&self, n: usize, rng: &mut Rng) -> Result<TabularDataset> {
        MwemFit::sample(self, n, rng)
    }

    fn columns_observed(&self) -> &[String] {
        &self.columns_observed
    }
}

/// Serializable synthesizer choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SynthesizerConfig {
    Mwem(MwemConfig),
    /// Returns the training rows unchanged. Not private: for harness tests
    /// and as a "synthetic equals real" reference only.
    Identity,
}

impl Default for SynthesizerConfig {
    fn default() -> Self {
        SynthesizerConfig::Mwem(MwemConfig::default())
    }
}

impl Synthesizer for SynthesizerConfig {
    fn name(&self) -> &'static str {
        match self {
            SynthesizerConfig::Mwem(_) => "mwem",
            SynthesizerConfig::Identity => "identity",
        }
    }

    fn fit(
        &self,
        data: &TabularDataset,
        epsilon: f64,
        ledger: &mut BudgetLedger,
        rng: &mut Rng,
    ) -> Result<Box<dyn FittedSynthesizer>> {
        match self {
            SynthesizerConfig::Mwem(cfg) => Ok(Box::new(mwem_fit(data, epsilon, cfg, ledger, rng)?)),
            SynthesizerConfig::Identity => {
                // book the declared budget so ledgers look the same for every synthesizer
                ledger.spend("identity", PrivacyBudget::pure(epsilon)?)?;
                Ok(Box::new(IdentityFit {
                    columns: data.schema().names().iter().map(|s| s.to_string()).collect(),
                    data: data.clone(),
                }))
            }
        }
    }
}

struct IdentityFit {
    data: TabularDataset,
    columns: Vec<String>,
}

impl FittedSynthesizer for IdentityFit {
    /// The first `n` training rows, cycling when `n` exceeds the data size.
    fn sample(&self, n: usize, _rng: &mut Rng) -> Result<TabularDataset> {
        let m = self.data.n_rows();
        let idx: Vec<usize> = if m == 0 { Vec::new() } else { (0..n).map(|i| i % m).collect() };
        Ok(self.data.take_rows(&idx))
    }

    fn columns_observed(&self) -> &[String] {
        &self.columns
    }
}
