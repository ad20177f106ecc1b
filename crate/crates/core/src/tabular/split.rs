use rand::seq::SliceRandom;

use super::dataset::TabularDataset;
use crate::error::{Error, Result};
use crate::mechanisms::Rng;

/// Target size of the first side, `floor(fraction * n)`.
fn first_side(fraction: f64, n: usize) -> usize {
    // guard against products like 0.29 * 100 = 28.999999999999996
    ((fraction * n as f64) + 1e-9).floor() as usize
}

/// Splits into `(train, test)` with `floor(fraction * n)` training rows.
///
/// When a target is set the split is stratified: every class contributes
/// `floor(fraction * n_k)` rows, and the leftover slots go to the classes with
/// the largest fractional remainders, so each class lands within one row of
/// its proportional share. Both sides keep the original row order.
pub fn train_test_split(
    d: &TabularDataset,
    fraction: f64,
    seed: u64,
) -> Result<(TabularDataset, TabularDataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidSpec(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let n = d.n_rows();
    let n_train = first_side(fraction, n);
    if n_train == 0 || n_train == n {
        return Err(Error::EmptySplit {
            train: n_train,
            test: n - n_train,
        });
    }
    let mut rng = Rng::new(seed);

    let groups: Vec<Vec<usize>> = match d.target_values() {
        Ok(labels) => {
            let k = d.n_classes()?;
            let mut g = vec![Vec::new(); k];
            for (i, y) in labels.into_iter().enumerate() {
                g[y].push(i);
            }
            g
        }
        Err(_) => vec![(0..n).collect()],
    };

    let shares: Vec<f64> = groups
        .iter()
        .map(|g| fraction * g.len() as f64)
        .collect();
    let mut take: Vec<usize> = shares.iter().map(|s| (s + 1e-9).floor() as usize).collect();
    let mut leftover = n_train - take.iter().sum::<usize>();
    let mut by_remainder: Vec<usize> = (0..groups.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        let ra = shares[a] - take[a] as f64;
        let rb = shares[b] - take[b] as f64;
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &g in by_remainder.iter().cycle() {
        if leftover == 0 {
            break;
        }
        if take[g] < groups[g].len() {
            take[g] += 1;
            leftover -= 1;
        }
    }

    let mut train_idx = Vec::with_capacity(n_train);
    let mut test_idx = Vec::with_capacity(n - n_train);
    for (g, t) in groups.into_iter().zip(take) {
        let mut g = g;
        g.shuffle(&mut rng);
        train_idx.extend_from_slice(&g[..t]);
        test_idx.extend_from_slice(&g[t..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((d.take_rows(&train_idx), d.take_rows(&test_idx)))
}
