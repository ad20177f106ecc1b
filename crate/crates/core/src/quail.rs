//! QUAIL: a DP classifier and a DP synthesizer trained under a split budget.
//!
//! The budget `epsilon` is split into `p * epsilon` for the synthesizer, which
//! never sees the target column, and the remainder for a classifier trained on
//! the full data. Synthesizer samples are then labelled by the classifier. By
//! sequential composition the combined output is `epsilon`-DP; labelling is
//! post-processing.
//!
//! The sweep compares, for each split and dataset size, a DP classifier trained
//! on real data with the classifier's share of the budget (`f1_vanilla`)
//! against a random forest trained on QUAIL output (`f1_quail`), reporting
//! `delta = f1_vanilla - f1_quail`. Positive deltas mean the plain DP
//! classifier did better.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{fit_random_forest, DpClassifierConfig, ForestConfig, TrainedClassifier};
use crate::error::{Error, Result};
use crate::mechanisms::{split_budget, BudgetLedger, PrivacyBudget, Rng};
use crate::metrics::{f1_score, mean_stderr, Averaging};
use crate::synth::{FittedSynthesizer, Synthesizer, SynthesizerConfig};
use crate::tabular::{generate_classification_data, train_test_split, SyntheticTaskSpec, TabularDataset};

/// Order in which the two component models are trained. Each component draws
/// from its own child stream, so the output does not depend on this.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingOrder {
    #[default]
    Parallel,
    ClassifierFirst,
    SynthesizerFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuailConfig {
    pub split_factor: f64,
    pub n_samples: usize,
    #[serde(default)]
    pub synthesizer: SynthesizerConfig,
    #[serde(default = "default_classifier")]
    pub classifier: DpClassifierConfig,
    #[serde(default)]
    pub order: TrainingOrder,
}

fn default_classifier() -> DpClassifierConfig {
    DpClassifierConfig::Gnb
}

impl QuailConfig {
    pub fn new(split_factor: f64, n_samples: usize) -> Self {
        QuailConfig {
            split_factor,
            n_samples,
            synthesizer: SynthesizerConfig::default(),
            classifier: default_classifier(),
            order: TrainingOrder::default(),
        }
    }
}

pub struct QuailResult {
    pub synthetic: TabularDataset,
    pub ledger: BudgetLedger,
    pub synthesizer_budget: PrivacyBudget,
    pub classifier_budget: PrivacyBudget,
    pub classifier: TrainedClassifier,
    /// Columns the synthesizer read while fitting.
    pub synthesizer_columns: Vec<String>,
}

pub fn quail_fit_sample(
    d: &TabularDataset,
    target: &str,
    epsilon: f64,
    config: &QuailConfig,
    rng: &Rng,
) -> Result<QuailResult> {
    let (synth_budget, clf_budget) = split_budget(PrivacyBudget::pure(epsilon)?, config.split_factor)?;
    let column = d
        .schema()
        .column(target)
        .ok_or(Error::NoTarget)?;
    if !column.is_categorical() {
        return Err(Error::InvalidSpec(format!(
            "target `{target}` must be categorical"
        )));
    }
    let cardinality = column.cells() as u32;
    let labelled = d.with_target(Some(target))?;
    let features_only = labelled.drop_column(target)?;

    let train_classifier = || -> Result<(TrainedClassifier, BudgetLedger)> {
        let mut ledger = BudgetLedger::new(clf_budget);
        let model = config.classifier.fit(
            &labelled,
            clf_budget.epsilon,
            &mut ledger,
            &mut rng.child("classifier"),
        )?;
        Ok((model, ledger))
    };
    let train_synthesizer = || -> Result<(Box<dyn FittedSynthesizer>, BudgetLedger)> {
        let mut ledger = BudgetLedger::new(synth_budget);
        let fit = config.synthesizer.fit(
            &features_only,
            synth_budget.epsilon,
            &mut ledger,
            &mut rng.child("synthesizer"),
        )?;
        Ok((fit, ledger))
    };
    let (clf, synth) = match config.order {
        TrainingOrder::Parallel => rayon::join(train_classifier, train_synthesizer),
        TrainingOrder::ClassifierFirst => {
            let c = train_classifier();
            (c, train_synthesizer())
        }
        TrainingOrder::SynthesizerFirst => {
            let s = train_synthesizer();
            (train_classifier(), s)
        }
    };
    let (classifier, clf_ledger) = clf?;
    let (fitted, synth_ledger) = synth?;

    let mut ledger = BudgetLedger::new(PrivacyBudget::pure(epsilon)?);
    for spend in synth_ledger.spends().iter().chain(clf_ledger.spends()) {
        ledger.spend(spend.label.clone(), spend.amount)?;
    }

    let sample = fitted.sample(config.n_samples, &mut rng.child("sample"))?;
    let labels = classifier.predict(&sample)?;
    let names = d.schema().names();
    let synthetic = sample
        .append_labels(&labels, target, cardinality)?
        .select_columns(&names)?
        .with_target(Some(target))?;

    Ok(QuailResult {
        synthetic,
        ledger,
        synthesizer_budget: synth_budget,
        classifier_budget: clf_budget,
        classifier,
        synthesizer_columns: fitted.columns_observed().to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Dataset template; `n_samples` is replaced by each size and `seed` by a
    /// per-(size, run) seed.
    pub template: SyntheticTaskSpec,
    pub sizes: Vec<usize>,
    pub splits: Vec<f64>,
    pub epsilon: f64,
    pub runs: usize,
    pub synthesizer: SynthesizerConfig,
    pub classifier: DpClassifierConfig,
    pub forest: ForestConfig,
    pub train_fraction: f64,
    pub averaging: Averaging,
}

impl SweepConfig {
    /// Defaults used by the command-line sweep: seven features quantised to
    /// four bins each (5 informative), ten classes.
    pub fn new(epsilon: f64, sizes: Vec<usize>, splits: Vec<f64>, runs: usize) -> Self {
        SweepConfig {
            template: SyntheticTaskSpec {
                n_samples: 0,
                n_features: 7,
                n_classes: 10,
                n_informative: 5,
                class_separation: 1.5,
                seed: 0,
                bins: 4,
            },
            sizes,
            splits,
            epsilon,
            runs,
            synthesizer: SynthesizerConfig::default(),
            classifier: DpClassifierConfig::Gnb,
            forest: ForestConfig::default(),
            train_fraction: 0.8,
            averaging: Averaging::Macro,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.splits.is_empty() {
            return Err(Error::InvalidSpec("sweep needs at least one size and one split".into()));
        }
        if self.runs == 0 {
            return Err(Error::NonPositiveParameter {
                name: "runs",
                value: 0.0,
            });
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::NonPositiveParameter {
                name: "epsilon",
                value: self.epsilon,
            });
        }
        if let Some(&p) = self.splits.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::SplitOutOfRange(p));
        }
        let mut template = self.template.clone();
        for &n in &self.sizes {
            template.n_samples = n;
            template.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub split: f64,
    pub size: usize,
    pub run: usize,
    pub dataset_seed: u64,
    pub f1_vanilla: f64,
    pub f1_quail: f64,
    /// The same DP classifier trained with the whole budget.
    pub f1_vanilla_full: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaCell {
    pub split: f64,
    pub size: usize,
    pub mean_delta: f64,
    pub stderr_delta: f64,
    pub run_count: usize,
    pub mean_f1_vanilla: f64,
    pub mean_f1_quail: f64,
    pub mean_f1_vanilla_full: f64,
}

/// Rows are splits, columns are dataset sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaGrid {
    pub epsilon: f64,
    pub splits: Vec<f64>,
    pub sizes: Vec<usize>,
    pub cells: Vec<Vec<DeltaCell>>,
    pub runs: Vec<SweepRun>,
}

impl DeltaGrid {
    pub fn cell(&self, split: f64, size: usize) -> Option<&DeltaCell> {
        let i = self.splits.iter().position(|&p| p == split)?;
        let j = self.sizes.iter().position(|&s| s == size)?;
        Some(&self.cells[i][j])
    }

    /// Heatmap-ready matrix: header `split,<size>...`, one row per split.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = std::iter::once("split".to_string())
            .chain(self.sizes.iter().map(|s| s.to_string()))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for (p, row) in self.splits.iter().zip(&self.cells) {
            let vals: Vec<String> = row.iter().map(|c| c.mean_delta.to_string()).collect();
            writeln!(w, "{},{}", p, vals.join(","))?;
        }
        Ok(())
    }

    /// Writes `delta_grid_eps<e>.csv` and `.json` into `dir`.
    pub fn emit(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let stem = format!("delta_grid_eps{}", self.epsilon);
        let csv_path = dir.join(format!("{stem}.csv"));
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        std::fs::write(&csv_path, buf)?;
        let json_path = dir.join(format!("{stem}.json"));
        std::fs::write(&json_path, serde_json::to_string_pretty(self)?)?;
        Ok(vec![csv_path, json_path])
    }
}

fn sweep_group(cfg: &SweepConfig, size: usize, run: usize, rng: &Rng) -> Result<Vec<SweepRun>> {
    let group = rng.child(&format!("size{size}/run{run}"));
    let dataset_seed = group.child("dataset").next_u64();
    let mut spec = cfg.template.clone();
    spec.n_samples = size;
    spec.seed = dataset_seed;
    let data = generate_classification_data(&spec)?;
    let target = data.target().ok_or(Error::NoTarget)?.to_owned();
    let (train, test) = train_test_split(&data, cfg.train_fraction, group.child("split").next_u64())?;
    let truth = test.target_values()?;

    let vanilla_f1 = |eps: f64, label: &str| -> Result<f64> {
        let mut ledger = BudgetLedger::new(PrivacyBudget::pure(eps)?);
        let model = cfg.classifier.fit(&train, eps, &mut ledger, &mut group.child(label))?;
        f1_score(&truth, &model.predict(&test)?, cfg.averaging)
    };
    let f1_vanilla_full = vanilla_f1(cfg.epsilon, "vanilla_full")?;

    cfg.splits
        .iter()
        .map(|&p| {
            let stream = group.child(&format!("split{p}"));
            let (_, clf_budget) = split_budget(PrivacyBudget::pure(cfg.epsilon)?, p)?;
            let f1_vanilla = {
                let mut ledger = BudgetLedger::new(clf_budget);
                let model = cfg.classifier.fit(
                    &train,
                    clf_budget.epsilon,
                    &mut ledger,
                    &mut stream.child("vanilla"),
                )?;
                f1_score(&truth, &model.predict(&test)?, cfg.averaging)?
            };
            let qcfg = QuailConfig {
                split_factor: p,
                n_samples: train.n_rows(),
                synthesizer: cfg.synthesizer.clone(),
                classifier: cfg.classifier.clone(),
                order: TrainingOrder::ClassifierFirst,
            };
            let q = quail_fit_sample(&train, &target, cfg.epsilon, &qcfg, &stream.child("quail"))?;
            let forest = fit_random_forest(&q.synthetic, &cfg.forest, stream.child("forest").next_u64())?;
            let f1_quail = f1_score(&truth, &forest.predict(&test)?, cfg.averaging)?;
            Ok(SweepRun {
                split: p,
                size,
                run,
                dataset_seed,
                f1_vanilla,
                f1_quail,
                f1_vanilla_full,
                delta: f1_vanilla - f1_quail,
            })
        })
        .collect()
}

/// Runs every (split, size, run) combination. All splits for a given
/// (size, run) share the same dataset and train/test split.
pub fn quail_delta_sweep(cfg: &SweepConfig, rng: &Rng) -> Result<DeltaGrid> {
    quail_delta_sweep_with_progress(cfg, rng, |_, _| {})
}

pub fn quail_delta_sweep_with_progress(
    cfg: &SweepConfig,
    rng: &Rng,
    progress: impl Fn(usize, usize) + Sync,
) -> Result<DeltaGrid> {
    cfg.validate()?;
    let groups: Vec<(usize, usize)> = cfg
        .sizes
        .iter()
        .flat_map(|&s| (0..cfg.runs).map(move |r| (s, r)))
        .collect();
    let done = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<Vec<SweepRun>> = groups
        .par_iter()
        .map(|&(size, run)| {
            let out = sweep_group(cfg, size, run, rng);
            let k = done.fetch_add(1, std::sync::atomic::Ordering::SeqCst) + 1;
            progress(k, groups.len());
            out
        })
        .collect::<Result<_>>()?;
    let runs: Vec<SweepRun> = results.into_iter().flatten().collect();

    let cells = cfg
        .splits
        .iter()
        .map(|&p| {
            cfg.sizes
                .iter()
                .map(|&size| {
                    let mine: Vec<&SweepRun> = runs
                        .iter()
                        .filter(|r| r.split == p && r.size == size)
                        .collect();
                    let deltas: Vec<f64> = mine.iter().map(|r| r.delta).collect();
                    let (mean_delta, stderr_delta) = mean_stderr(&deltas);
                    let mean_of = |f: fn(&SweepRun) -> f64| {
                        mine.iter().map(|r| f(r)).sum::<f64>() / mine.len() as f64
                    };
                    DeltaCell {
                        split: p,
                        size,
                        mean_delta,
                        stderr_delta,
                        run_count: mine.len(),
                        mean_f1_vanilla: mean_of(|r| r.f1_vanilla),
                        mean_f1_quail: mean_of(|r| r.f1_quail),
                        mean_f1_vanilla_full: mean_of(|r| r.f1_vanilla_full),
                    }
                })
                .collect()
        })
        .collect();

    Ok(DeltaGrid {
        epsilon: cfg.epsilon,
        splits: cfg.splits.clone(),
        sizes: cfg.sizes.clone(),
        cells,
        runs,
    })
}
