//! Evaluation metrics: propensity MSE, synthetic ranking agreement, F1 and
//! ROC AUC.

mod pmse;

pub use pmse::{pmse_ratio, pmse_ratio_with, propensity_design, PropensityModel, PropensityReport};

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::classifiers::BaselineKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    #[default]
    Macro,
    Micro,
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch {
            expected: a,
            actual: b,
        });
    }
    Ok(())
}

fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// F1 of `positive` treated as the positive class.
pub fn f1_binary(labels: &[usize], predictions: &[usize], positive: usize) -> Result<f64> {
    check_lengths(labels.len(), predictions.len())?;
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (&y, &p) in labels.iter().zip(predictions) {
        match (y == positive, p == positive) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => {}
        }
    }
    Ok(f1_from_counts(tp, fp, fn_))
}

/// F1 averaged over the classes occurring in either `labels` or
/// `predictions`. Macro averaging takes the unweighted mean of per-class F1;
/// micro averaging pools the counts (and so equals accuracy for single-label
/// data).
pub fn f1_score(labels: &[usize], predictions: &[usize], averaging: Averaging) -> Result<f64> {
    check_lengths(labels.len(), predictions.len())?;
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let k = labels.iter().chain(predictions).max().unwrap() + 1;
    let mut tp = vec![0usize; k];
    let mut fp = vec![0usize; k];
    let mut fn_ = vec![0usize; k];
    for (&y, &p) in labels.iter().zip(predictions) {
        if y == p {
            tp[y] += 1;
        } else {
            fp[p] += 1;
            fn_[y] += 1;
        }
    }
    Ok(match averaging {
        Averaging::Micro => f1_from_counts(tp.iter().sum(), fp.iter().sum(), fn_.iter().sum()),
        Averaging::Macro => {
            let present: Vec<usize> = (0..k).filter(|&c| tp[c] + fp[c] + fn_[c] > 0).collect();
            present
                .iter()
                .map(|&c| f1_from_counts(tp[c], fp[c], fn_[c]))
                .sum::<f64>()
                / present.len() as f64
        }
    })
}

/// Area under the ROC curve as the Mann-Whitney statistic: the fraction of
/// (positive, negative) pairs ordered correctly, ties counting one half.
pub fn auc_roc(labels: &[bool], scores: &[f64]) -> Result<f64> {
    check_lengths(labels.len(), scores.len())?;
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // twice the rank sum of positives, with tied groups sharing their mean rank
    let mut rank_sum2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]].total_cmp(&scores[order[i]]) == Ordering::Equal {
            j += 1;
        }
        // ranks i+1 ..= j+1, mean (i + j + 2) / 2
        let pos = order[i..=j].iter().filter(|&&o| labels[o]).count() as u128;
        rank_sum2 += pos * (i + j + 2) as u128;
        i = j + 1;
    }
    let (p, q) = (n_pos as u128, n_neg as u128);
    // U = R - p(p+1)/2, computed in halves to stay exact
    let u2 = rank_sum2 - p * (p + 1);
    Ok(u2 as f64 / (2 * p * q) as f64)
}

/// One-vs-rest macro AUC over probability columns. Classes that are absent
/// from `labels` (or cover every label) are skipped.
pub fn auc_roc_ovr(labels: &[usize], proba: &[Vec<f64>]) -> Result<f64> {
    check_lengths(labels.len(), proba.len())?;
    let k = proba.first().map_or(0, |p| p.len());
    let mut total = 0.0;
    let mut heads = 0;
    for c in 0..k {
        let pos: Vec<bool> = labels.iter().map(|&y| y == c).collect();
        let scores: Vec<f64> = proba.iter().map(|p| p[c]).collect();
        match auc_roc(&pos, &scores) {
            Ok(a) => {
                total += a;
                heads += 1;
            }
            Err(Error::SingleClass) => {}
            Err(e) => return Err(e),
        }
    }
    if heads == 0 {
        return Err(Error::SingleClass);
    }
    Ok(total / heads as f64)
}

/// Synthetic ranking agreement: the fraction of unordered pairs `(i, j)`
/// whose comparison has the same sign on both sides. A pair tied on one side
/// only counts as disagreement.
pub fn sra(real: &[f64], synthetic: &[f64]) -> Result<f64> {
    check_lengths(real.len(), synthetic.len())?;
    if real.len() < 2 {
        return Err(Error::TooFewAlgorithms(real.len()));
    }
    let n = real.len();
    let mut agree = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            if real[i].total_cmp(&real[j]) == synthetic[i].total_cmp(&synthetic[j]) {
                agree += 1;
            }
        }
    }
    Ok(agree as f64 / (n * (n - 1) / 2) as f64)
}

/// Mean and standard error of the mean (zero for a single value).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Protocol {
    Tstr,
    Trtr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierScore {
    pub classifier: BaselineKind,
    pub f1: f64,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    pub protocol: Protocol,
    pub scores: Vec<ClassifierScore>,
    pub best_f1: f64,
    pub best_auc: f64,
}

impl UtilityReport {
    pub fn new(protocol: Protocol, scores: Vec<ClassifierScore>) -> Self {
        let best_f1 = scores.iter().map(|s| s.f1).fold(f64::NEG_INFINITY, f64::max);
        let best_auc = scores.iter().map(|s| s.auc).fold(f64::NEG_INFINITY, f64::max);
        UtilityReport {
            protocol,
            scores,
            best_f1,
            best_auc,
        }
    }

    pub fn f1_vector(&self) -> Vec<f64> {
        self.scores.iter().map(|s| s.f1).collect()
    }
}
