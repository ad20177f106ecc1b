//! Supervised learners: DP Gaussian naive Bayes and DP logistic regression
//! (embeddable in QUAIL), plus non-private baselines for the evaluation zoo.

mod gnb;
mod logreg;
pub(crate) mod solver;
mod tree;

pub use gnb::{fit_dp_gnb, GaussianNbParams, GNB_VAR_SMOOTHING};
pub use logreg::{fit_dp_logreg, fit_logistic_baseline, scale_row, LinearModel};
pub use tree::{fit_decision_tree, fit_random_forest, ForestConfig, Tree, TreeConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::{BudgetLedger, PrivacyBudget, Rng};
use crate::tabular::TabularDataset;

/// Per-feature `(lower, upper)` clipping bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBounds {
    bounds: Vec<(f64, f64)>,
}

impl FeatureBounds {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        for (i, &(l, u)) in bounds.iter().enumerate() {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(Error::InvalidSpec(format!(
                    "feature {i} needs finite lower < upper, got ({l}, {u})"
                )));
            }
        }
        Ok(FeatureBounds { bounds })
    }

    /// Bounds implied by the dataset's schema for its non-target columns.
    /// Single-category columns get `(0, 1)`.
    pub fn from_schema(d: &TabularDataset) -> Self {
        let bounds = d
            .feature_columns()
            .iter()
            .map(|c| {
                let (l, u) = c.value_range();
                if u > l {
                    (l, u)
                } else {
                    (l, l + 1.0)
                }
            })
            .collect();
        FeatureBounds { bounds }
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    pub fn get(&self, i: usize) -> (f64, f64) {
        self.bounds[i]
    }

    pub fn clip(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.bounds)
            .map(|(&v, &(l, u))| v.clamp(l, u))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Logistic,
    DecisionTree,
    RandomForest,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [
        BaselineKind::Logistic,
        BaselineKind::DecisionTree,
        BaselineKind::RandomForest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Logistic => "logistic",
            BaselineKind::DecisionTree => "decision_tree",
            BaselineKind::RandomForest => "random_forest",
        }
    }
}

/// DP classifier choice for QUAIL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DpClassifierConfig {
    Gnb,
    #[serde(rename = "logreg")]
    LogReg {
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
}

fn default_lambda() -> f64 {
    0.01
}

impl DpClassifierConfig {
    /// Trains the classifier, spending exactly `epsilon` from `ledger` in one spend.
    pub fn fit(
        &self,
        train: &TabularDataset,
        epsilon: f64,
        ledger: &mut BudgetLedger,
        rng: &mut Rng,
    ) -> Result<TrainedClassifier> {
        if !(epsilon > 0.0) {
            return Err(Error::NonPositiveParameter {
                name: "epsilon",
                value: epsilon,
            });
        }
        let bounds = FeatureBounds::from_schema(train);
        let model = match self {
            DpClassifierConfig::Gnb => fit_dp_gnb(train, epsilon, &bounds, rng)?,
            DpClassifierConfig::LogReg { lambda } => {
                fit_dp_logreg(train, epsilon, &bounds, *lambda, rng)?
            }
        };
        ledger.spend(model.kind.name(), PrivacyBudget::pure(epsilon)?)?;
        Ok(model)
    }

    pub fn name(&self) -> &'static str {
        match self {
            DpClassifierConfig::Gnb => "dp_gnb",
            DpClassifierConfig::LogReg { .. } => "dp_logreg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    DpGnb,
    DpLogReg,
    Logistic,
    DecisionTree,
    RandomForest,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::DpGnb => "dp_gnb",
            ModelKind::DpLogReg => "dp_logreg",
            ModelKind::Logistic => "logistic",
            ModelKind::DecisionTree => "decision_tree",
            ModelKind::RandomForest => "random_forest",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelParams {
    GaussianNb(GaussianNbParams),
    Linear(LinearModel),
    Tree(Tree),
    Forest { trees: Vec<Tree> },
}

/// A fitted classifier mapping feature rows to labels in `0..n_classes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub kind: ModelKind,
    pub feature_names: Vec<String>,
    pub bounds: FeatureBounds,
    pub n_classes: usize,
    pub params: ModelParams,
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

impl TrainedClassifier {
    fn check_width(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.feature_names.len() {
            return Err(Error::SchemaMismatch(format!(
                "expected {} features, got {}",
                self.feature_names.len(),
                row.len()
            )));
        }
        Ok(())
    }

    fn proba_one(&self, row: &[f64]) -> Vec<f64> {
        let row = self.bounds.clip(row);
        match &self.params {
            ModelParams::GaussianNb(p) => p.predict_proba(&row),
            ModelParams::Linear(m) => m.predict_proba(&row, &self.bounds),
            ModelParams::Tree(t) => t.leaf_distribution(&row).to_vec(),
            ModelParams::Forest { trees } => {
                let mut acc = vec![0.0; self.n_classes];
                for t in trees {
                    for (a, p) in acc.iter_mut().zip(t.leaf_distribution(&row)) {
                        *a += p;
                    }
                }
                let k = trees.len() as f64;
                acc.iter_mut().for_each(|a| *a /= k);
                acc
            }
        }
    }

    /// Class probabilities for raw feature rows (in training feature order).
    /// Rows outside the bounds are clipped first.
    pub fn predict_proba_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter()
            .map(|r| {
                self.check_width(r)?;
                Ok(self.proba_one(r))
            })
            .collect()
    }

    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        rows.iter()
            .map(|r| {
                self.check_width(r)?;
                Ok(match &self.params {
                    ModelParams::GaussianNb(p) => p.predict(&self.bounds.clip(r)),
                    _ => argmax(&self.proba_one(r)),
                })
            })
            .collect()
    }

    /// Extracts this model's feature columns (by name) from `d`.
    pub fn features_of(&self, d: &TabularDataset) -> Result<Vec<Vec<f64>>> {
        let idx: Vec<usize> = self
            .feature_names
            .iter()
            .map(|n| {
                d.schema()
                    .index_of(n)
                    .ok_or_else(|| Error::SchemaMismatch(format!("missing feature column `{n}`")))
            })
            .collect::<Result<_>>()?;
        Ok(d.rows()
            .iter()
            .map(|r| idx.iter().map(|&i| r[i]).collect())
            .collect())
    }

    pub fn predict(&self, d: &TabularDataset) -> Result<Vec<usize>> {
        self.predict_rows(&self.features_of(d)?)
    }

    pub fn predict_proba(&self, d: &TabularDataset) -> Result<Vec<Vec<f64>>> {
        self.predict_proba_rows(&self.features_of(d)?)
    }
}

/// Training inputs shared by every learner.
pub(crate) struct TrainingSet {
    pub feature_names: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
    pub n_classes: usize,
}

impl TrainingSet {
    pub fn from_dataset(d: &TabularDataset) -> Result<Self> {
        let y = d.target_values()?;
        Ok(TrainingSet {
            feature_names: d.feature_columns().iter().map(|c| c.name.clone()).collect(),
            x: d.feature_rows(),
            y,
            n_classes: d.n_classes()?,
        })
    }
}

/// Non-private classifier for TSTR/TRTR scoring. Never touches a ledger.
pub fn fit_baseline(train: &TabularDataset, kind: BaselineKind, seed: u64) -> Result<TrainedClassifier> {
    match kind {
        BaselineKind::Logistic => fit_logistic_baseline(train),
        BaselineKind::DecisionTree => fit_decision_tree(train, &TreeConfig::default(), seed),
        BaselineKind::RandomForest => fit_random_forest(train, &ForestConfig::default(), seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{ColumnSchema, Schema};

    fn xor() -> TabularDataset {
        let schema = Schema::new(vec![
            ColumnSchema::categorical("a", 2),
            ColumnSchema::categorical("b", 2),
            ColumnSchema::categorical("y", 2),
        ])
        .unwrap();
        TabularDataset::new(
            schema,
            vec![
                vec![0.0, 0.0, 0.0],
                vec![0.0, 1.0, 1.0],
                vec![1.0, 0.0, 1.0],
                vec![1.0, 1.0, 0.0],
            ],
            Some("y".into()),
        )
        .unwrap()
    }

    #[test]
    fn tree_shatters_xor() {
        let d = xor();
        let t = fit_baseline(&d, BaselineKind::DecisionTree, 0).unwrap();
        assert_eq!(t.predict(&d).unwrap(), d.target_values().unwrap());
    }

    #[test]
    fn baselines_are_deterministic() {
        let d = xor();
        for kind in BaselineKind::ALL {
            let a = fit_baseline(&d, kind, 5).unwrap();
            let b = fit_baseline(&d, kind, 5).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.predict(&d).unwrap(), b.predict(&d).unwrap());
        }
    }

    #[test]
    fn no_target() {
        let d = xor().with_target(None).unwrap();
        for kind in BaselineKind::ALL {
            assert!(matches!(fit_baseline(&d, kind, 0), Err(Error::NoTarget)));
        }
    }

    #[test]
    fn empty_rows_predict_empty() {
        let d = xor();
        let t = fit_baseline(&d, BaselineKind::Logistic, 0).unwrap();
        assert!(t.predict_rows(&[]).unwrap().is_empty());
        assert!(matches!(
            t.predict_rows(&[vec![1.0]]),
            Err(Error::SchemaMismatch(_))
        ));
        let missing = d.drop_column("a").unwrap();
        assert!(matches!(t.predict(&missing), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn probabilities_sum_to_one() {
        let d = xor();
        for kind in BaselineKind::ALL {
            let m = fit_baseline(&d, kind, 1).unwrap();
            for p in m.predict_proba(&d).unwrap() {
                assert_eq!(p.len(), 2);
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                assert!(p.iter().all(|&x| x >= 0.0));
            }
        }
    }

    #[test]
    fn bounds_validation() {
        assert!(FeatureBounds::new(vec![(1.0, 1.0)]).is_err());
        let b = FeatureBounds::new(vec![(0.0, 1.0), (-1.0, 1.0)]).unwrap();
        assert_eq!(b.clip(&[2.0, -5.0]), vec![1.0, -1.0]);
    }

    #[test]
    fn model_export_roundtrips() {
        let d = xor();
        let m = fit_baseline(&d, BaselineKind::DecisionTree, 0).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        let back: TrainedClassifier = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}
