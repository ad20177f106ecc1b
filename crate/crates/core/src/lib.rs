//! Differentially private tabular data synthesis and evaluation.
//!
//! The crate provides an MWEM synthesizer, DP Gaussian naive Bayes and DP
//! logistic regression, the QUAIL ensemble that combines a DP classifier
//! with a DP synthesizer under a split budget, distributional and
//! machine-learning utility metrics, and a seeded benchmark harness.

pub mod bench;
pub mod classifiers;
pub mod error;
pub mod mechanisms;
pub mod metrics;
pub mod mwem;
pub mod quail;
pub mod synth;
pub mod tabular;

pub use error::{Error, Result};
