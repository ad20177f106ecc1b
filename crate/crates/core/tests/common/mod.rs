// Shared fixtures and reference implementations for the integration tests.
// The references are written from textbook definitions and deliberately do
// not call into the crate's own fitting code.
#![allow(dead_code)]

use dpsynth::mechanisms::Rng;
use dpsynth::metrics::PropensityReport;
use dpsynth::mwem::LinearQuery;
use dpsynth::tabular::{
    generate_classification_data, train_test_split, ColumnSchema, Schema, SyntheticTaskSpec,
    TabularDataset,
};
use std::path::{Path, PathBuf};

use dpsynth::tabular::save_csv;
use rand::seq::SliceRandom;
use rand::Rng as _;

// ---------------------------------------------------------------- fixtures

/// Dataset over three 4-level categorical columns (64 cells) with
/// strong dependence between the columns.
pub fn cube_data(n: usize, seed: u64) -> TabularDataset {
    let schema = Schema::new(vec![
        ColumnSchema::categorical("a", 4),
        ColumnSchema::categorical("b", 4),
        ColumnSchema::categorical("c", 4),
    ])
    .unwrap();
    let mut rng = Rng::new(seed);
    let weights = [0.5, 0.25, 0.15, 0.1];
    let rows = (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            let mut a = 3;
            let mut acc = 0.0;
            for (i, w) in weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    a = i;
                    break;
                }
            }
            let b = if rng.gen_bool(0.7) { a } else { rng.gen_range(0..4) };
            let c = if rng.gen_bool(0.6) { (a + b) % 4 } else { rng.gen_range(0..4) };
            vec![a as f64, b as f64, c as f64]
        })
        .collect();
    TabularDataset::new(schema, rows, None).unwrap()
}

pub fn task(n: usize, features: usize, classes: usize, informative: usize, sep: f64, seed: u64) -> SyntheticTaskSpec {
    SyntheticTaskSpec {
        n_samples: n,
        n_features: features,
        n_classes: classes,
        n_informative: informative,
        class_separation: sep,
        seed,
        bins: 4,
    }
}

/// Generated task split into `n_train` training and `n_test` held-out rows.
pub fn train_test(spec: &SyntheticTaskSpec, n_test: usize) -> (TabularDataset, TabularDataset) {
    let d = generate_classification_data(spec).unwrap();
    let fraction = 1.0 - n_test as f64 / spec.n_samples as f64;
    train_test_split(&d, fraction, spec.seed ^ 0x5eed).unwrap()
}

pub fn accuracy(truth: &[usize], predicted: &[usize]) -> f64 {
    let hits = truth.iter().zip(predicted).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}

/// Three 4-level categorical features plus a binary target that depends on
/// the first two, written as `data.csv` and `schema.json` under `dir`.
pub fn categorical_task_files(dir: &Path, n: usize, seed: u64) -> (PathBuf, PathBuf) {
    let base = cube_data(n, seed);
    let mut rng = Rng::new(seed ^ 0xc0de);
    let labels: Vec<usize> = base
        .rows()
        .iter()
        .map(|r| {
            let clean = (r[0] + r[1] >= 3.0) as usize;
            if rng.gen_bool(0.1) {
                1 - clean
            } else {
                clean
            }
        })
        .collect();
    let d = base.append_labels(&labels, "y", 2).unwrap();
    let data = dir.join("data.csv");
    let schema = dir.join("schema.json");
    save_csv(&d, &data).unwrap();
    let columns = serde_json::to_value(d.schema().columns()).unwrap();
    let text = serde_json::json!({"columns": columns, "target": "y"});
    std::fs::write(&schema, text.to_string()).unwrap();
    (data, schema)
}

// ---------------------------------------------------------------- MWEM

/// Counts rows of `d` satisfying every predicate of `q`, straight from the
/// raw values (categorical columns only).
pub fn brute_force_answer(q: &LinearQuery, d: &TabularDataset) -> f64 {
    d.rows()
        .iter()
        .filter(|r| q.predicates().iter().all(|p| p.allowed[r[p.column] as usize]))
        .count() as f64
}

// ---------------------------------------------------------------- classifiers

/// Plain Gaussian naive Bayes: empirical priors, per-class means and
/// maximum-likelihood variances, after clipping features to `bounds`.
pub struct GnbOracle {
    priors: Vec<f64>,
    means: Vec<Vec<f64>>,
    vars: Vec<Vec<f64>>,
    bounds: Vec<(f64, f64)>,
}

impl GnbOracle {
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, bounds: &[(f64, f64)]) -> Self {
        let d = bounds.len();
        let clip = |r: &[f64]| -> Vec<f64> {
            r.iter().zip(bounds).map(|(v, (l, u))| v.clamp(*l, *u)).collect()
        };
        let mut count = vec![0.0f64; n_classes];
        let mut sum = vec![vec![0.0; d]; n_classes];
        for (r, &c) in x.iter().zip(y) {
            count[c] += 1.0;
            for (s, v) in sum[c].iter_mut().zip(clip(r)) {
                *s += v;
            }
        }
        let means: Vec<Vec<f64>> = sum
            .iter()
            .zip(&count)
            .map(|(s, n)| s.iter().map(|v| v / n.max(1.0)).collect())
            .collect();
        let mut sq = vec![vec![0.0; d]; n_classes];
        for (r, &c) in x.iter().zip(y) {
            for (f, v) in clip(r).iter().enumerate() {
                sq[c][f] += (v - means[c][f]).powi(2);
            }
        }
        let vars = sq
            .iter()
            .zip(&count)
            .map(|(s, n)| s.iter().map(|v| v / n.max(1.0)).collect())
            .collect();
        let total: f64 = count.iter().sum();
        GnbOracle {
            priors: count.iter().map(|c| c / total).collect(),
            means,
            vars,
            bounds: bounds.to_vec(),
        }
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for c in 0..self.priors.len() {
            if self.priors[c] == 0.0 {
                continue;
            }
            let mut ll = self.priors[c].ln();
            for (f, v) in row.iter().enumerate() {
                let (l, u) = self.bounds[f];
                let x = v.clamp(l, u);
                let var = self.vars[c][f];
                ll += -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (x - self.means[c][f]).powi(2) / (2.0 * var);
            }
            if ll > best.1 {
                best = (c, ll);
            }
        }
        best.0
    }
}

/// Min-max scaled features plus intercept, divided by `sqrt(d + 1)`.
pub fn unit_ball_features(row: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    let norm = ((row.len() + 1) as f64).sqrt();
    let mut out: Vec<f64> = row
        .iter()
        .zip(bounds)
        .map(|(v, (l, u))| (v.clamp(*l, *u) - l) / (u - l) / norm)
        .collect();
    out.push(1.0 / norm);
    out
}

/// Minimises `(1/n) sum log(1 + exp(-s_i w.x_i)) + lambda/2 |w|^2` by
/// Nesterov-accelerated gradient descent until the gradient max-norm is
/// below `tol`.
pub fn logistic_gd(x: &[Vec<f64>], y: &[bool], lambda: f64, tol: f64) -> Vec<f64> {
    let dim = x[0].len();
    let n = x.len() as f64;
    let max_sq = x.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>()).fold(0.0, f64::max);
    let step = 1.0 / (0.25 * max_sq + lambda);
    let grad = |w: &[f64]| -> Vec<f64> {
        let mut g: Vec<f64> = w.iter().map(|v| lambda * v).collect();
        for (r, &label) in x.iter().zip(y) {
            let z: f64 = r.iter().zip(w).map(|(a, b)| a * b).sum();
            let p = 1.0 / (1.0 + (-z).exp());
            let resid = (p - if label { 1.0 } else { 0.0 }) / n;
            for (gi, ri) in g.iter_mut().zip(r) {
                *gi += resid * ri;
            }
        }
        g
    };
    let mut w = vec![0.0; dim];
    let mut prev = w.clone();
    for k in 0..200_000 {
        let momentum = k as f64 / (k as f64 + 3.0);
        let v: Vec<f64> = w.iter().zip(&prev).map(|(a, b)| a + momentum * (a - b)).collect();
        let g = grad(&v);
        prev = w;
        w = v.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        if grad(&w).iter().all(|gi| gi.abs() < tol) {
            return w;
        }
    }
    panic!("gradient descent did not reach tolerance {tol}");
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// ---------------------------------------------------------------- metrics

/// F1 of one class from raw confusion counts.
pub fn f1_by_counting(labels: &[usize], predictions: &[usize], positive: usize) -> f64 {
    let tp = labels.iter().zip(predictions).filter(|(y, p)| **y == positive && **p == positive).count() as f64;
    let fp = labels.iter().zip(predictions).filter(|(y, p)| **y != positive && **p == positive).count() as f64;
    let fn_ = labels.iter().zip(predictions).filter(|(y, p)| **y == positive && **p != positive).count() as f64;
    if tp == 0.0 {
        return 0.0;
    }
    let precision = tp / (tp + fp);
    let recall = tp / (tp + fn_);
    2.0 * precision * recall / (precision + recall)
}

/// AUC by enumerating every (positive, negative) pair.
pub fn auc_by_pairs(labels: &[bool], scores: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0.0;
    for i in 0..labels.len() {
        for j in 0..labels.len() {
            if labels[i] && !labels[j] {
                pairs += 1.0;
                total += if scores[i] > scores[j] {
                    1.0
                } else if scores[i] == scores[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    total / pairs
}

/// Ranking agreement by comparing every pair's ordering.
pub fn sra_by_pairs(real: &[f64], synth: &[f64]) -> f64 {
    let sign = |a: f64, b: f64| (a > b) as i8 - (a < b) as i8;
    let mut agree = 0;
    let mut total = 0;
    for i in 0..real.len() {
        for j in (i + 1)..real.len() {
            total += 1;
            if sign(real[i], real[j]) == sign(synth[i], synth[j]) {
                agree += 1;
            }
        }
    }
    agree as f64 / total as f64
}

// ---------------------------------------------------------------- pMSE

/// Dataset for the propensity checks: 10 000 rows, 3 continuous features
/// (4 bins each) plus a 3-class target.
pub fn propensity_pool(seed: u64) -> TabularDataset {
    generate_classification_data(&task(10_000, 3, 3, 2, 1.0, seed)).unwrap()
}

/// The pool cut into two disjoint 5000-row halves at random.
pub fn disjoint_halves(d: &TabularDataset, rng: &mut Rng) -> (TabularDataset, TabularDataset) {
    let mut idx: Vec<usize> = (0..d.n_rows()).collect();
    idx.shuffle(rng);
    let half = d.n_rows() / 2;
    (d.take_rows(&idx[..half]), d.take_rows(&idx[half..]))
}

pub type PmseFn = fn(&TabularDataset, &TabularDataset) -> PropensityReport;

/// Permutation null of the pMSE ratio: `pool` is reshuffled `reshuffles`
/// times into two halves and the ratio recorded for each. Returns the sorted
/// ratios.
pub fn permutation_null(pool: &TabularDataset, reshuffles: usize, seed: u64, pmse: PmseFn) -> Vec<f64> {
    let mut rng = Rng::new(seed);
    let mut ratios: Vec<f64> = (0..reshuffles)
        .map(|_| {
            let (a, b) = disjoint_halves(pool, &mut rng);
            pmse(&a, &b).ratio
        })
        .collect();
    ratios.sort_by(f64::total_cmp);
    ratios
}

pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}
