//! Experiment harness: epsilon sweeps over synthesizers with TSTR/TRTR
//! scoring, propensity scores and ranking agreement, plus report files.
//!
//! Every (synthesizer, epsilon, run) cell is independent and draws from a
//! child stream named after its coordinates, so results do not depend on
//! scheduling. A failing cell is recorded with its error and the plan
//! continues.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{fit_baseline, BaselineKind, DpClassifierConfig};
use crate::error::{Error, Result};
use crate::mechanisms::{BudgetLedger, PrivacyBudget, Rng};
use crate::metrics::{
    auc_roc_ovr, f1_score, mean_stderr, pmse_ratio, sra, Averaging, ClassifierScore,
    PropensityReport, Protocol, UtilityReport,
};
use crate::quail::{quail_fit_sample, QuailConfig, TrainingOrder};
use crate::synth::{Synthesizer, SynthesizerConfig};
use crate::tabular::{
    generate_classification_data, load_csv, train_test_split, SchemaFile, SyntheticTaskSpec,
    TabularDataset,
};

pub const REPORT_VERSION: u32 = 1;

/// Known departures from the reference evaluation protocol, echoed in every
/// report.
pub const DEVIATIONS: &[&str] = &[
    "evaluation zoo reduced to logistic regression, decision tree and random forest (AdaBoost, bagging and MLP omitted)",
    "train/test protocol: stratified split with the plan's train fraction (default 0.8)",
    "synthetic sample size equals the real training split size",
    "F1 is macro-averaged over classes present in labels or predictions; multiclass AUC is one-vs-rest macro",
    "propensity model: first-order logistic regression on drop-first one-hot cells (bins for continuous columns)",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Generated(SyntheticTaskSpec),
    Csv {
        data: PathBuf,
        schema: PathBuf,
        /// Overrides the target named in the schema file.
        #[serde(default)]
        target: Option<String>,
    },
}

impl DatasetSource {
    pub fn load(&self) -> Result<TabularDataset> {
        match self {
            DatasetSource::Generated(spec) => generate_classification_data(spec),
            DatasetSource::Csv {
                data,
                schema,
                target,
            } => {
                let file = SchemaFile::load(schema)?;
                let target = target.clone().or(file.target.clone());
                load_csv(data, &file.schema()?, target.as_deref())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuailWrapper {
    pub split: f64,
    #[serde(default = "default_quail_classifier")]
    pub classifier: DpClassifierConfig,
}

fn default_quail_classifier() -> DpClassifierConfig {
    DpClassifierConfig::Gnb
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSynthesizer {
    /// Label used in reports; defaults to the synthesizer kind (with a
    /// `quail_` prefix when wrapped).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub config: SynthesizerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quail: Option<QuailWrapper>,
}

impl PlanSynthesizer {
    pub fn new(config: SynthesizerConfig) -> Self {
        PlanSynthesizer {
            name: None,
            config,
            quail: None,
        }
    }

    pub fn label(&self) -> String {
        match (&self.name, &self.quail) {
            (Some(n), _) => n.clone(),
            (None, Some(_)) => format!("quail_{}", self.config.name()),
            (None, None) => self.config.name().to_string(),
        }
    }
}

fn default_runs() -> usize {
    12
}

fn default_train_fraction() -> f64 {
    0.8
}

fn default_zoo() -> Vec<BaselineKind> {
    BaselineKind::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub dataset: DatasetSource,
    pub synthesizers: Vec<PlanSynthesizer>,
    pub epsilons: Vec<f64>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_zoo")]
    pub zoo: Vec<BaselineKind>,
    #[serde(default)]
    pub averaging: Averaging,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentPlan {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.synthesizers.is_empty() {
            return Err(Error::EmptyPlan);
        }
        if self.epsilons.is_empty() {
            return Err(Error::InvalidPlan("epsilon list is empty".into()));
        }
        if let Some(e) = self.epsilons.iter().find(|&&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidPlan(format!("epsilon {e} is not positive")));
        }
        if self.epsilons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPlan("epsilons must be strictly ascending".into()));
        }
        if self.runs == 0 {
            return Err(Error::InvalidPlan("runs must be at least 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidPlan(format!(
                "train_fraction {} outside (0, 1)",
                self.train_fraction
            )));
        }
        if self.zoo.is_empty() {
            return Err(Error::InvalidPlan("zoo is empty".into()));
        }
        let mut labels = HashSet::new();
        for s in &self.synthesizers {
            if !labels.insert(s.label()) {
                return Err(Error::InvalidPlan(format!("duplicate synthesizer `{}`", s.label())));
            }
            if let Some(q) = &s.quail {
                if !(q.split > 0.0 && q.split < 1.0) {
                    return Err(Error::SplitOutOfRange(q.split));
                }
            }
            if let SynthesizerConfig::Mwem(m) = &s.config {
                m.validate()?;
            }
        }
        if let DatasetSource::Generated(spec) = &self.dataset {
            spec.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetRole {
    Train,
    Test,
    Synthetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessPurpose {
    Fit,
    Evaluate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataAccess {
    pub dataset: DatasetRole,
    pub purpose: AccessPurpose,
    pub by: String,
}

/// Records every hand-out of a dataset within a cell.
#[derive(Debug, Default)]
struct AccessLog(Vec<DataAccess>);

impl AccessLog {
    fn take<'d>(
        &mut self,
        d: &'d TabularDataset,
        dataset: DatasetRole,
        purpose: AccessPurpose,
        by: &str,
    ) -> &'d TabularDataset {
        self.0.push(DataAccess {
            dataset,
            purpose,
            by: by.to_string(),
        });
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub synthesizer: String,
    pub epsilon: f64,
    pub run: usize,
    pub seed: u64,
    pub status: CellStatus,
    pub error: Option<String>,
    pub utility: Option<UtilityReport>,
    pub propensity: Option<PropensityReport>,
    pub sra: Option<f64>,
    pub epsilon_spent: Option<f64>,
    pub synthesizer_columns: Vec<String>,
    pub access: Vec<DataAccess>,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrtrRecord {
    pub run: usize,
    pub seed: u64,
    pub utility: UtilityReport,
    pub wall_clock_seconds: f64,
}

/// Per-(synthesizer, epsilon) means and standard errors over successful runs.
/// Fields are empty when no run succeeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub synthesizer: String,
    pub epsilon: f64,
    pub runs: usize,
    pub failed: usize,
    pub mean_best_f1: Option<f64>,
    pub stderr_f1: Option<f64>,
    pub mean_best_auc: Option<f64>,
    pub stderr_auc: Option<f64>,
    pub mean_pmse_ratio: Option<f64>,
    pub stderr_pmse_ratio: Option<f64>,
    pub mean_sra: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub version: u32,
    pub code_version: String,
    pub plan: ExperimentPlan,
    pub records: Vec<RunRecord>,
    pub aggregates: Vec<Aggregate>,
    pub trtr: Vec<TrtrRecord>,
    pub deviations: Vec<String>,
}

impl EvaluationReport {
    pub fn failed_cells(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.status == CellStatus::Failed)
            .count()
    }
}

fn evaluate_zoo(
    fit_on: &TabularDataset,
    test: &TabularDataset,
    zoo: &[BaselineKind],
    seed: u64,
    protocol: Protocol,
    averaging: Averaging,
) -> Result<UtilityReport> {
    let truth = test.target_values()?;
    let scores = zoo
        .iter()
        .map(|&kind| {
            let model = fit_baseline(fit_on, kind, seed)?;
            let proba = model.predict_proba(test)?;
            let predictions = model.predict_rows(&model.features_of(test)?)?;
            Ok(ClassifierScore {
                classifier: kind,
                f1: f1_score(&truth, &predictions, averaging)?,
                auc: auc_roc_ovr(&truth, &proba)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(UtilityReport::new(protocol, scores))
}

struct RunData {
    train: TabularDataset,
    test: TabularDataset,
    trtr: TrtrRecord,
}

struct CellOutput {
    utility: UtilityReport,
    propensity: PropensityReport,
    epsilon_spent: f64,
    columns: Vec<String>,
}

fn run_cell(
    plan: &ExperimentPlan,
    s: &PlanSynthesizer,
    epsilon: f64,
    data: &RunData,
    rng: &Rng,
    log: &mut AccessLog,
) -> Result<CellOutput> {
    let n = data.train.n_rows();
    let mut ledger = BudgetLedger::new(PrivacyBudget::pure(epsilon)?);
    let (synthetic, columns) = match &s.quail {
        None => {
            let train = log.take(&data.train, DatasetRole::Train, AccessPurpose::Fit, "synthesizer");
            let fit = s.config.fit(train, epsilon, &mut ledger, &mut rng.child("fit"))?;
            let sample = fit.sample(n, &mut rng.child("sample"))?;
            (sample, fit.columns_observed().to_vec())
        }
        Some(q) => {
            let train = log.take(&data.train, DatasetRole::Train, AccessPurpose::Fit, "quail");
            let target = train.target().ok_or(Error::NoTarget)?;
            let cfg = QuailConfig {
                split_factor: q.split,
                n_samples: n,
                synthesizer: s.config.clone(),
                classifier: q.classifier.clone(),
                order: TrainingOrder::ClassifierFirst,
            };
            let out = quail_fit_sample(train, target, epsilon, &cfg, &rng.child("quail"))?;
            ledger = out.ledger;
            (out.synthetic, out.synthesizer_columns)
        }
    };
    if !ledger.is_exhausted() {
        return Err(Error::InvalidBudget(format!(
            "ledger spent {} of {}",
            ledger.spent().epsilon,
            epsilon
        )));
    }
    let synthetic = synthetic.with_target(data.train.target())?;

    let fit_on = log.take(&synthetic, DatasetRole::Synthetic, AccessPurpose::Fit, "zoo");
    let test = log.take(&data.test, DatasetRole::Test, AccessPurpose::Evaluate, "zoo");
    let utility = evaluate_zoo(
        fit_on,
        test,
        &plan.zoo,
        // same classifier seeds as the run's TRTR block
        data.trtr.seed,
        Protocol::Tstr,
        plan.averaging,
    )?;
    let real = log.take(&data.train, DatasetRole::Train, AccessPurpose::Evaluate, "pmse");
    let synth = log.take(&synthetic, DatasetRole::Synthetic, AccessPurpose::Evaluate, "pmse");
    let propensity = pmse_ratio(real, synth)?;
    Ok(CellOutput {
        utility,
        propensity,
        epsilon_spent: ledger.spent().epsilon,
        columns,
    })
}

pub fn run_plan(plan: &ExperimentPlan) -> Result<EvaluationReport> {
    run_plan_with_progress(plan, |_, _| {})
}

/// [`run_plan`] calling `progress(done, total)` as cells finish.
pub fn run_plan_with_progress(
    plan: &ExperimentPlan,
    progress: impl Fn(usize, usize) + Sync,
) -> Result<EvaluationReport> {
    plan.validate()?;
    let data = plan.dataset.load()?;
    if data.target().is_none() {
        return Err(Error::NoTarget);
    }
    let master = Rng::new(plan.seed);

    let runs: Vec<RunData> = (0..plan.runs)
        .into_par_iter()
        .map(|r| {
            let start = Instant::now();
            let (train, test) = train_test_split(
                &data,
                plan.train_fraction,
                master.child_indexed("split", r as u64).next_u64(),
            )?;
            let seed = master.child_indexed("trtr", r as u64).next_u64();
            let utility = evaluate_zoo(&train, &test, &plan.zoo, seed, Protocol::Trtr, plan.averaging)?;
            Ok(RunData {
                trtr: TrtrRecord {
                    run: r,
                    seed,
                    utility,
                    wall_clock_seconds: start.elapsed().as_secs_f64(),
                },
                train,
                test,
            })
        })
        .collect::<Result<_>>()?;

    let cells: Vec<(usize, f64, usize)> = (0..plan.synthesizers.len())
        .flat_map(|s| {
            plan.epsilons
                .iter()
                .flat_map(move |&e| (0..plan.runs).map(move |r| (s, e, r)))
        })
        .collect();
    let done = AtomicUsize::new(0);
    let records: Vec<RunRecord> = cells
        .par_iter()
        .map(|&(si, epsilon, run)| {
            let s = &plan.synthesizers[si];
            let label = s.label();
            let rng = master.child(&format!("cell/{label}/{epsilon}/{run}"));
            let start = Instant::now();
            let mut log = AccessLog::default();
            let outcome = run_cell(plan, s, epsilon, &runs[run], &rng, &mut log);
            let trtr_f1 = runs[run].trtr.utility.f1_vector();
            let mut record = RunRecord {
                synthesizer: label,
                epsilon,
                run,
                seed: rng.seed(),
                status: CellStatus::Ok,
                error: None,
                utility: None,
                propensity: None,
                sra: None,
                epsilon_spent: None,
                synthesizer_columns: Vec::new(),
                access: Vec::new(),
                wall_clock_seconds: 0.0,
            };
            match outcome {
                Ok(out) => {
                    record.sra = sra(&trtr_f1, &out.utility.f1_vector()).ok();
                    record.utility = Some(out.utility);
                    record.propensity = Some(out.propensity);
                    record.epsilon_spent = Some(out.epsilon_spent);
                    record.synthesizer_columns = out.columns;
                }
                Err(e) => {
                    record.status = CellStatus::Failed;
                    record.error = Some(e.to_string());
                }
            }
            record.access = log.0;
            record.wall_clock_seconds = start.elapsed().as_secs_f64();
            progress(done.fetch_add(1, Ordering::SeqCst) + 1, cells.len());
            record
        })
        .collect();

    let mut report = EvaluationReport {
        version: REPORT_VERSION,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        plan: plan.clone(),
        records,
        aggregates: Vec::new(),
        trtr: runs.into_iter().map(|r| r.trtr).collect(),
        deviations: DEVIATIONS.iter().map(|s| s.to_string()).collect(),
    };
    report.aggregates = aggregate(&report);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SraCell {
    pub synthesizer: String,
    pub epsilon: f64,
    /// `(run, sra)` for every successful run.
    pub per_run: Vec<(usize, f64)>,
    pub mean: Option<f64>,
}

/// Ranking agreement between the TRTR and TSTR per-classifier F1 vectors,
/// per synthesizer and epsilon, averaged over successful runs.
pub fn sra_block(report: &EvaluationReport) -> Result<Vec<SraCell>> {
    if report.plan.zoo.len() < 2 {
        return Err(Error::TooFewAlgorithms(report.plan.zoo.len()));
    }
    let mut out = Vec::new();
    for s in &report.plan.synthesizers {
        let label = s.label();
        for &epsilon in &report.plan.epsilons {
            let mut per_run = Vec::new();
            for r in report
                .records
                .iter()
                .filter(|r| r.synthesizer == label && r.epsilon == epsilon)
            {
                if let Some(u) = &r.utility {
                    let real = report.trtr[r.run].utility.f1_vector();
                    per_run.push((r.run, sra(&real, &u.f1_vector())?));
                }
            }
            let mean = if per_run.is_empty() {
                None
            } else {
                Some(per_run.iter().map(|p| p.1).sum::<f64>() / per_run.len() as f64)
            };
            out.push(SraCell {
                synthesizer: label.clone(),
                epsilon,
                per_run,
                mean,
            });
        }
    }
    Ok(out)
}

/// Aggregates recomputed from the run records (in run order).
pub fn aggregate(report: &EvaluationReport) -> Vec<Aggregate> {
    let sra_cells = sra_block(report).ok();
    let mut out = Vec::new();
    for s in &report.plan.synthesizers {
        let label = s.label();
        for &epsilon in &report.plan.epsilons {
            let mine: Vec<&RunRecord> = report
                .records
                .iter()
                .filter(|r| r.synthesizer == label && r.epsilon == epsilon)
                .collect();
            let ok: Vec<&RunRecord> = mine
                .iter()
                .copied()
                .filter(|r| r.status == CellStatus::Ok)
                .collect();
            let stats = |f: &dyn Fn(&RunRecord) -> f64| -> (Option<f64>, Option<f64>) {
                if ok.is_empty() {
                    return (None, None);
                }
                let v: Vec<f64> = ok.iter().map(|r| f(r)).collect();
                let (m, s) = mean_stderr(&v);
                (Some(m), Some(s))
            };
            let (mean_best_f1, stderr_f1) = stats(&|r| r.utility.as_ref().unwrap().best_f1);
            let (mean_best_auc, stderr_auc) = stats(&|r| r.utility.as_ref().unwrap().best_auc);
            let (mean_pmse_ratio, stderr_pmse_ratio) =
                stats(&|r| r.propensity.as_ref().unwrap().ratio);
            let mean_sra = sra_cells.as_ref().and_then(|cells| {
                cells
                    .iter()
                    .find(|c| c.synthesizer == label && c.epsilon == epsilon)
                    .and_then(|c| c.mean)
            });
            out.push(Aggregate {
                synthesizer: label.clone(),
                epsilon,
                runs: ok.len(),
                failed: mine.len() - ok.len(),
                mean_best_f1,
                stderr_f1,
                mean_best_auc,
                stderr_auc,
                mean_pmse_ratio,
                stderr_pmse_ratio,
                mean_sra,
            });
        }
    }
    out
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const SUMMARY_HEADER: &str = "synthesizer,epsilon,mean_best_f1,stderr_f1,mean_best_auc,stderr_auc,mean_pmse_ratio,stderr_pmse_ratio,mean_sra,runs";

pub fn summary_csv(report: &EvaluationReport) -> String {
    let mut s = String::new();
    writeln!(s, "{SUMMARY_HEADER}").unwrap();
    for a in &report.aggregates {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            a.synthesizer,
            a.epsilon,
            cell(a.mean_best_f1),
            cell(a.stderr_f1),
            cell(a.mean_best_auc),
            cell(a.stderr_auc),
            cell(a.mean_pmse_ratio),
            cell(a.stderr_pmse_ratio),
            cell(a.mean_sra),
            a.runs
        )
        .unwrap();
    }
    s
}

/// One plot-data table: epsilon, then one column per synthesizer.
fn plot_csv(report: &EvaluationReport, metric: fn(&Aggregate) -> Option<f64>) -> String {
    let labels: Vec<String> = report.plan.synthesizers.iter().map(|s| s.label()).collect();
    let mut s = format!("epsilon,{}\n", labels.join(","));
    for &e in &report.plan.epsilons {
        let vals: Vec<String> = labels
            .iter()
            .map(|l| {
                report
                    .aggregates
                    .iter()
                    .find(|a| &a.synthesizer == l && a.epsilon == e)
                    .and_then(metric)
                    .map(|v| v.to_string())
                    .unwrap_or_default()
            })
            .collect();
        writeln!(s, "{},{}", e, vals.join(",")).unwrap();
    }
    s
}

/// Writes `report.json`, `summary.csv` and `plot_<metric>.csv` files into
/// `dir`, returning the paths written.
pub fn emit_report(report: &EvaluationReport, dir: &Path) -> Result<Vec<PathBuf>> {
    if report.plan.synthesizers.is_empty() {
        return Err(Error::EmptyPlan);
    }
    std::fs::create_dir_all(dir)?;
    let mut files: Vec<(PathBuf, String)> = vec![
        (dir.join("report.json"), serde_json::to_string_pretty(report)?),
        (dir.join("summary.csv"), summary_csv(report)),
    ];
    let plots: [(&str, fn(&Aggregate) -> Option<f64>); 4] = [
        ("best_f1", |a| a.mean_best_f1),
        ("best_auc", |a| a.mean_best_auc),
        ("pmse_ratio", |a| a.mean_pmse_ratio),
        ("sra", |a| a.mean_sra),
    ];
    for (name, metric) in plots {
        files.push((dir.join(format!("plot_{name}.csv")), plot_csv(report, metric)));
    }
    for (path, body) in &files {
        std::fs::write(path, body)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

/// Strips wall-clock fields so two reports can be compared for determinism.
pub fn without_timing(report: &EvaluationReport) -> serde_json::Value {
    let mut v = serde_json::to_value(report).expect("report serializes");
    strip_key(&mut v, "wall_clock_seconds");
    v
}

fn strip_key(v: &mut serde_json::Value, key: &str) {
    match v {
        serde_json::Value::Object(map) => {
            map.remove(key);
            map.values_mut().for_each(|x| strip_key(x, key));
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(|x| strip_key(x, key)),
        _ => {}
    }
}
