//! Privacy budgets, splitting, and sequential-composition accounting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An (epsilon, delta) privacy parameter pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::InvalidBudget(format!(
                "epsilon must be finite and >= 0, got {epsilon}"
            )));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::InvalidBudget(format!(
                "delta must lie in [0, 1], got {delta}"
            )));
        }
        Ok(PrivacyBudget { epsilon, delta })
    }

    /// Pure epsilon-DP budget.
    pub fn pure(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 0.0)
    }
}

/// `total - part`, nudged by ulps until `part + rest` reaches `total` without
/// passing it (or lands just below when no value reaches it exactly).
fn complement(total: f64, part: f64) -> f64 {
    // fl(part + rest) is monotone in rest
    let mut rest = total - part;
    while rest > 0.0 && part + rest > total {
        rest = rest.next_down();
    }
    while part + rest < total && part + rest.next_up() <= total {
        rest = rest.next_up();
    }
    rest.max(0.0)
}

/// Splits `total` into `(share, total - share)` with the two parts adding back
/// to `total` bit for bit.
///
/// `share` starts at `fraction * total`. When that value sits exactly on a
/// rounding tie, no complement can reproduce the total, and the share is
/// lowered by one ulp (at most a couple of times) until one can.
fn exact_split(total: f64, fraction: f64) -> (f64, f64) {
    let mut share = fraction * total;
    loop {
        let rest = complement(total, share);
        if share + rest == total || share <= 0.0 {
            return (share, rest);
        }
        share = share.next_down();
    }
}

/// Splits `total` into a synthesizer share of about `p * total` and a
/// classifier share holding the remainder, so that the components always add
/// back to the total exactly. The synthesizer share equals `p * epsilon` except
/// in the rare rounding-tie case, where it is one ulp lower. Delta is split in
/// the same proportions.
pub fn split_budget(total: PrivacyBudget, p: f64) -> Result<(PrivacyBudget, PrivacyBudget)> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::SplitOutOfRange(p));
    }
    let (synth_eps, clf_eps) = exact_split(total.epsilon, p);
    let (synth_delta, clf_delta) = exact_split(total.delta, p);
    Ok((
        PrivacyBudget {
            epsilon: synth_eps,
            delta: synth_delta,
        },
        PrivacyBudget {
            epsilon: clf_eps,
            delta: clf_delta,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spend {
    pub label: String,
    pub amount: PrivacyBudget,
}

/// Running record of budget spends against a declared total.
///
/// Spends compose sequentially: the ledger refuses any spend that would push
/// the summed epsilon or delta above the total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetLedger {
    total: PrivacyBudget,
    spends: Vec<Spend>,
}

impl BudgetLedger {
    pub fn new(total: PrivacyBudget) -> Self {
        BudgetLedger {
            total,
            spends: Vec::new(),
        }
    }

    pub fn total(&self) -> PrivacyBudget {
        self.total
    }

    pub fn spends(&self) -> &[Spend] {
        &self.spends
    }

    pub fn spent(&self) -> PrivacyBudget {
        self.spends.iter().fold(
            PrivacyBudget {
                epsilon: 0.0,
                delta: 0.0,
            },
            |acc, s| PrivacyBudget {
                epsilon: acc.epsilon + s.amount.epsilon,
                delta: acc.delta + s.amount.delta,
            },
        )
    }

    pub fn remaining(&self) -> PrivacyBudget {
        let spent = self.spent();
        PrivacyBudget {
            epsilon: (self.total.epsilon - spent.epsilon).max(0.0),
            delta: (self.total.delta - spent.delta).max(0.0),
        }
    }

    /// True when the recorded spends add up to the total exactly.
    pub fn is_exhausted(&self) -> bool {
        let spent = self.spent();
        spent.epsilon == self.total.epsilon && spent.delta == self.total.delta
    }

    pub fn spend(&mut self, label: impl Into<String>, amount: PrivacyBudget) -> Result<()> {
        let spent = self.spent();
        if spent.epsilon + amount.epsilon > self.total.epsilon
            || spent.delta + amount.delta > self.total.delta
        {
            return Err(Error::BudgetExhausted {
                requested: amount.epsilon,
                remaining: self.remaining().epsilon,
            });
        }
        self.spends.push(Spend {
            label: label.into(),
            amount,
        });
        Ok(())
    }
}
