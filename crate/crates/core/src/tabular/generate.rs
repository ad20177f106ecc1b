//! Synthetic multiclass classification tasks.
//!
//! Classes are Gaussian clusters centred on distinct vertices of a hypercube
//! with half-side `class_separation` in the informative subspace; the
//! remaining features are independent standard-normal noise. Every feature
//! is clipped to `[-(class_separation + 3), class_separation + 3]`.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::dataset::TabularDataset;
use super::schema::{ColumnSchema, Schema, DEFAULT_BINS};
use crate::error::{Error, Result};
use crate::mechanisms::Rng;

pub const TARGET_NAME: &str = "y";

fn default_bins() -> u32 {
    DEFAULT_BINS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTaskSpec {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub n_informative: usize,
    pub class_separation: f64,
    pub seed: u64,
    /// Discretization bins declared for each continuous feature.
    #[serde(default = "default_bins")]
    pub bins: u32,
}

impl SyntheticTaskSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidSpec(m));
        if self.n_features == 0 {
            return fail("n_features must be >= 1".into());
        }
        if self.n_informative == 0 || self.n_informative > self.n_features {
            return fail(format!(
                "n_informative must lie in 1..={}, got {}",
                self.n_features, self.n_informative
            ));
        }
        if self.n_classes < 2 {
            return fail(format!("n_classes must be >= 2, got {}", self.n_classes));
        }
        if self.n_samples < self.n_classes {
            return fail(format!(
                "n_samples ({}) must be >= n_classes ({})",
                self.n_samples, self.n_classes
            ));
        }
        if self.n_informative < 64 && (1u64 << self.n_informative) < self.n_classes as u64 {
            return fail(format!(
                "{} informative features give only {} hypercube vertices for {} classes",
                self.n_informative,
                1u64 << self.n_informative,
                self.n_classes
            ));
        }
        if !(self.class_separation.is_finite() && self.class_separation > 0.0) {
            return fail("class_separation must be positive and finite".into());
        }
        if self.bins == 0 {
            return fail("bins must be >= 1".into());
        }
        Ok(())
    }

    pub fn bound(&self) -> f64 {
        self.class_separation + 3.0
    }

    pub fn schema(&self) -> Result<Schema> {
        let b = self.bound();
        let mut cols: Vec<ColumnSchema> = (0..self.n_features)
            .map(|i| ColumnSchema::continuous(format!("x{i}"), -b, b, self.bins))
            .collect();
        cols.push(ColumnSchema::categorical(TARGET_NAME, self.n_classes as u32));
        Schema::new(cols)
    }
}

/// Draws `n_classes` distinct hypercube vertices, as sign vectors.
fn vertices(n_informative: usize, n_classes: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    let mut chosen: Vec<u64> = Vec::with_capacity(n_classes);
    if n_informative <= 20 {
        let mut all: Vec<u64> = (0..(1u64 << n_informative)).collect();
        all.shuffle(rng);
        chosen.extend_from_slice(&all[..n_classes]);
    } else {
        while chosen.len() < n_classes {
            let v = rand::Rng::gen::<u64>(rng) & ((1u64 << n_informative.min(63)) - 1);
            if !chosen.contains(&v) {
                chosen.push(v);
            }
        }
    }
    chosen
        .into_iter()
        .map(|bits| {
            (0..n_informative)
                .map(|d| if (bits >> d) & 1 == 1 { 1.0 } else { -1.0 })
                .collect()
        })
        .collect()
}

pub fn generate_classification_data(spec: &SyntheticTaskSpec) -> Result<TabularDataset> {
    spec.validate()?;
    let schema = spec.schema()?;
    let root = Rng::new(spec.seed);
    let mut centroid_rng = root.child("centroids");
    let mut sample_rng = root.child("samples");
    let mut order_rng = root.child("order");

    let centroids = vertices(spec.n_informative, spec.n_classes, &mut centroid_rng);
    let bound = spec.bound();
    let mut rows: Vec<Vec<f64>> = (0..spec.n_samples)
        .map(|i| {
            let class = i % spec.n_classes;
            let mut row: Vec<f64> = (0..spec.n_features)
                .map(|f| {
                    let z: f64 = StandardNormal.sample(&mut sample_rng);
                    let centre = if f < spec.n_informative {
                        centroids[class][f] * spec.class_separation
                    } else {
                        0.0
                    };
                    (centre + z).clamp(-bound, bound)
                })
                .collect();
            row.push(class as f64);
            row
        })
        .collect();
    rows.shuffle(&mut order_rng);
    Ok(TabularDataset::from_validated(
        schema,
        rows,
        Some(TARGET_NAME.to_owned()),
    ))
}
