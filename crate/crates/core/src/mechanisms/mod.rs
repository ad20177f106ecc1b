//! Differential privacy primitives: Laplace and exponential mechanisms,
//! deterministic randomness, and budget accounting.
//!
//! Every mechanism here is pure epsilon-DP; delta is carried by
//! [`PrivacyBudget`] only so that ledgers can also account for
//! (epsilon, delta) mechanisms.

mod budget;
mod rng;

pub use budget::{split_budget, BudgetLedger, PrivacyBudget, Spend};
pub use rng::Rng;

use crate::error::{Error, Result};

fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && !value.is_nan() {
        Ok(())
    } else {
        Err(Error::NonPositiveParameter { name, value })
    }
}

/// One draw from Laplace(0, scale) via the inverse CDF.
pub fn laplace_noise(scale: f64, rng: &mut Rng) -> f64 {
    let u = rng.open01() - 0.5;
    let magnitude = -(1.0 - 2.0 * u.abs()).ln();
    scale * magnitude * u.signum()
}

/// Laplace mechanism: `value + Lap(sensitivity / epsilon)`.
pub fn laplace(value: f64, sensitivity: f64, epsilon: f64, rng: &mut Rng) -> Result<f64> {
    require_positive("sensitivity", sensitivity)?;
    require_positive("epsilon", epsilon)?;
    Ok(value + laplace_noise(sensitivity / epsilon, rng))
}

/// Standard Gumbel draw.
fn gumbel(rng: &mut Rng) -> f64 {
    -(-rng.open01().ln()).ln()
}

/// Exponential mechanism over `scores`.
///
/// Returns index `i` with probability proportional to
/// `exp(epsilon * scores[i] / (2 * sensitivity))`. Sampling uses the
/// Gumbel-max trick, which needs no normalisation and so cannot overflow for
/// large `epsilon * score`.
pub fn exponential_choice(
    scores: &[f64],
    sensitivity: f64,
    epsilon: f64,
    rng: &mut Rng,
) -> Result<usize> {
    if scores.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    require_positive("sensitivity", sensitivity)?;
    if !(epsilon >= 0.0) {
        return Err(Error::NonPositiveParameter {
            name: "epsilon",
            value: epsilon,
        });
    }
    let factor = epsilon / (2.0 * sensitivity);
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut best = 0;
    let mut best_key = f64::NEG_INFINITY;
    for (i, s) in scores.iter().enumerate() {
        // max-shift keeps the logits bounded above by zero
        let key = factor * (s - max) + gumbel(rng);
        if key > best_key {
            best_key = key;
            best = i;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplace_huge_epsilon_is_exact_enough() {
        let mut rng = Rng::new(1);
        for _ in 0..1000 {
            let v = laplace(5.0, 1.0, 1e9, &mut rng).unwrap();
            assert!((v - 5.0).abs() < 1e-6);
        }
    }

    #[test]
    fn laplace_variance_and_mean() {
        let mut rng = Rng::new(2);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| laplace_noise(2.0, &mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // Var[Lap(b)] = 2 b^2 = 8
        assert!((var - 8.0).abs() / 8.0 < 0.05, "variance {var}");

        let unit: Vec<f64> = (0..n).map(|_| laplace_noise(1.0, &mut rng)).collect();
        let m = unit.iter().sum::<f64>() / n as f64;
        assert!(m.abs() < 0.02, "mean {m}");
    }

    #[test]
    fn laplace_rejects_zero_epsilon() {
        let mut rng = Rng::new(0);
        assert!(matches!(
            laplace(1.0, 1.0, 0.0, &mut rng),
            Err(Error::NonPositiveParameter { name: "epsilon", .. })
        ));
        assert!(matches!(
            laplace(1.0, 0.0, 1.0, &mut rng),
            Err(Error::NonPositiveParameter { name: "sensitivity", .. })
        ));
    }

    fn frequencies(scores: &[f64], eps: f64, draws: usize, seed: u64) -> Vec<usize> {
        let mut rng = Rng::new(seed);
        let mut counts = vec![0; scores.len()];
        for _ in 0..draws {
            counts[exponential_choice(scores, 1.0, eps, &mut rng).unwrap()] += 1;
        }
        counts
    }

    // chi-square critical values at the 1% level
    fn chi_square(counts: &[usize], expected: &[f64]) -> f64 {
        counts
            .iter()
            .zip(expected)
            .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
            .sum()
    }

    #[test]
    fn exponential_equal_scores_split_evenly() {
        let c = frequencies(&[3.0, 3.0], 1.0, 10_000, 4);
        let f = c[0] as f64 / 10_000.0;
        assert!((f - 0.5).abs() <= 0.02, "{f}");
    }

    #[test]
    fn exponential_zero_epsilon_is_uniform() {
        let c = frequencies(&[0.0, 5.0, 100.0, -3.0], 0.0, 10_000, 5);
        let stat = chi_square(&c, &[2500.0; 4]);
        assert!(stat < 11.345, "chi2 {stat}");
    }

    #[test]
    fn exponential_strong_preference() {
        let c = frequencies(&[0.0, 100.0], 1.0, 10_000, 6);
        assert!(c[1] as f64 / 10_000.0 >= 0.999);
    }

    #[test]
    fn exponential_shift_invariant() {
        // P(i) proportional to exp(s_i / 2) for eps = 1, sensitivity 1
        let base = [0.0, 1.0, 2.0];
        let shifted = [1000.0, 1001.0, 1002.0];
        let w: Vec<f64> = base.iter().map(|s: &f64| (s / 2.0).exp()).collect();
        let z: f64 = w.iter().sum();
        let expected: Vec<f64> = w.iter().map(|x| x / z * 100_000.0).collect();
        for scores in [base, shifted] {
            let c = frequencies(&scores, 1.0, 100_000, 7);
            // 2 degrees of freedom
            let chi = chi_square(&c, &expected);
            assert!(chi < 9.210, "{c:?} vs {expected:?}: {chi}");
        }
    }

    #[test]
    fn exponential_empty_candidates() {
        let mut rng = Rng::new(0);
        assert!(matches!(
            exponential_choice(&[], 1.0, 1.0, &mut rng),
            Err(Error::EmptyCandidates)
        ));
    }
}
