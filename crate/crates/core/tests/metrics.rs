mod common;

use common::{auc_by_pairs, f1_by_counting, permutation_null, propensity_pool, quantile, sra_by_pairs, PmseFn};
use dpsynth::mechanisms::Rng;
use dpsynth::metrics::{auc_roc, f1_binary, f1_score, pmse_ratio, pmse_ratio_with, sra, Averaging, PropensityModel};
use proptest::prelude::*;
use rand::seq::SliceRandom;

#[test]
fn f1_two_thirds() {
    // TP=2, FP=1, FN=1, TN=6
    let labels = [1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
    let preds = [1, 1, 0, 1, 0, 0, 0, 0, 0, 0];
    assert_eq!(f1_binary(&labels, &preds, 1).unwrap(), 2.0 / 3.0);
    assert_eq!(f1_by_counting(&labels, &preds, 1), 2.0 / 3.0);
}

#[test]
fn auc_three_of_four_pairs() {
    let labels = [false, false, true, true];
    let scores = [0.1, 0.4, 0.35, 0.8];
    assert_eq!(auc_roc(&labels, &scores).unwrap(), 0.75);
    assert_eq!(auc_roc(&labels, &[0.1, 0.2, 0.8, 0.9]).unwrap(), 1.0);
    assert_eq!(auc_roc(&labels, &[0.3; 4]).unwrap(), 0.5);
}

#[test]
fn sra_fixtures() {
    assert_eq!(sra(&[0.9, 0.5, 0.7], &[0.2, 0.4, 0.3]).unwrap(), 0.0);
    assert_eq!(sra(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap(), 2.0 / 3.0);
    assert_eq!(sra(&[0.3, 0.1, 0.2], &[0.3, 0.1, 0.2]).unwrap(), 1.0);
}

#[test]
fn macro_f1_zero_when_every_prediction_wrong() {
    assert_eq!(f1_score(&[2, 2, 2], &[0, 0, 0], Averaging::Macro).unwrap(), 0.0);
    assert_eq!(f1_score(&[0, 1, 2], &[0, 1, 2], Averaging::Macro).unwrap(), 1.0);
}

fn distinct(v: &[f64]) -> bool {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s.windows(2).all(|w| w[0] != w[1])
}

proptest! {
    #[test]
    fn f1_agrees_with_counting(pairs in proptest::collection::vec((0usize..3, 0usize..3), 1..60)) {
        let (labels, preds): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        for positive in 0..3 {
            let got = f1_binary(&labels, &preds, positive).unwrap();
            prop_assert!((got - f1_by_counting(&labels, &preds, positive)).abs() < 1e-12);
        }
        let present: Vec<usize> = (0..3).filter(|c| labels.contains(c) || preds.contains(c)).collect();
        let want = present.iter().map(|&c| f1_by_counting(&labels, &preds, c)).sum::<f64>() / present.len() as f64;
        prop_assert!((f1_score(&labels, &preds, Averaging::Macro).unwrap() - want).abs() < 1e-12);
        let acc = labels.iter().zip(&preds).filter(|(a, b)| a == b).count() as f64 / labels.len() as f64;
        prop_assert!((f1_score(&labels, &preds, Averaging::Micro).unwrap() - acc).abs() < 1e-12);
    }

    #[test]
    fn auc_agrees_with_pairs(points in proptest::collection::vec((any::<bool>(), 0u8..12), 2..80)) {
        let labels: Vec<bool> = points.iter().map(|p| p.0).collect();
        let scores: Vec<f64> = points.iter().map(|p| p.1 as f64 / 4.0).collect();
        prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
        let got = auc_roc(&labels, &scores).unwrap();
        prop_assert!((got - auc_by_pairs(&labels, &scores)).abs() < 1e-12);
        // strictly increasing transforms keep every comparison
        let moved: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
        prop_assert_eq!(auc_roc(&labels, &moved).unwrap(), got);
        let flipped: Vec<bool> = labels.iter().map(|l| !l).collect();
        prop_assert!((auc_roc(&flipped, &scores).unwrap() - (1.0 - got)).abs() < 1e-12);
    }

    #[test]
    fn sra_agrees_with_pairs(v in proptest::collection::vec((0u8..6, 0u8..6), 2..12)) {
        let real: Vec<f64> = v.iter().map(|p| p.0 as f64).collect();
        let synth: Vec<f64> = v.iter().map(|p| p.1 as f64).collect();
        let got = sra(&real, &synth).unwrap();
        prop_assert!((got - sra_by_pairs(&real, &synth)).abs() < 1e-12);
        let r2: Vec<f64> = real.iter().map(|x| x.powi(3) + 1.0).collect();
        let s2: Vec<f64> = synth.iter().map(|x| x.powi(3) + 1.0).collect();
        prop_assert_eq!(sra(&r2, &s2).unwrap(), got);
    }

    #[test]
    fn sra_self_and_mirror(x in proptest::collection::vec(-1e3f64..1e3, 2..10)) {
        prop_assume!(distinct(&x));
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        prop_assert_eq!(sra(&x, &x).unwrap(), 1.0);
        prop_assert_eq!(sra(&x, &neg).unwrap(), 0.0);
    }
}

fn logistic(a: &dpsynth::tabular::TabularDataset, b: &dpsynth::tabular::TabularDataset) -> dpsynth::metrics::PropensityReport {
    pmse_ratio(a, b).unwrap()
}

#[test]
fn constant_propensity_gives_zero() {
    let pool = propensity_pool(3);
    let (a, b) = common::disjoint_halves(&pool, &mut Rng::new(3));
    let r = pmse_ratio_with(&a, &b, PropensityModel::Constant).unwrap();
    assert_eq!(r.pmse, 0.0);
}

#[test]
fn row_shuffled_copy_within_its_null() {
    let d = propensity_pool(11).take_rows(&(0..2000).collect::<Vec<_>>());
    let mut idx: Vec<usize> = (0..d.n_rows()).collect();
    idx.shuffle(&mut Rng::new(5));
    let shuffled = d.take_rows(&idx);
    let r = pmse_ratio(&d, &shuffled).unwrap();

    let stacked = d.take_rows(&(0..d.n_rows()).chain(0..d.n_rows()).collect::<Vec<_>>());
    let f: PmseFn = logistic;
    let null = permutation_null(&stacked, 200, 7, f);
    assert!(r.ratio <= quantile(&null, 0.99), "{} vs q99 {}", r.ratio, quantile(&null, 0.99));
}

#[test]
fn constant_rows_are_easy_to_tell_apart() {
    let real = propensity_pool(21).take_rows(&(0..5000).collect::<Vec<_>>());
    let constant = real.take_rows(&vec![0; 5000]);
    let r = pmse_ratio(&real, &constant).unwrap();
    let c = r.synthetic_fraction;
    // near-perfect discrimination pushes pmse toward c(1 - c)
    assert!(r.pmse > 0.8 * c * (1.0 - c), "{r:?}");
    assert!(r.ratio >= 10.0);
}
