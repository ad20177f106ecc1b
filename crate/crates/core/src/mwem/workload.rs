use std::collections::HashSet;

use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::Rng;
use crate::tabular::DiscretizedView;

/// Allowed cells of one column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnPredicate {
    pub column: usize,
    pub allowed: Vec<bool>,
}

/// Counting query: the mass of all cells satisfying every column predicate.
///
/// Columns are kept in ascending order so equal predicates compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinearQuery {
    predicates: Vec<ColumnPredicate>,
}

impl LinearQuery {
    pub fn new(mut predicates: Vec<ColumnPredicate>) -> Self {
        predicates.sort_by_key(|p| p.column);
        LinearQuery { predicates }
    }

    /// Query over the whole domain.
    pub fn full() -> Self {
        LinearQuery {
            predicates: Vec::new(),
        }
    }

    pub fn predicates(&self) -> &[ColumnPredicate] {
        &self.predicates
    }

    pub fn matches(&self, view: &DiscretizedView, index: usize) -> bool {
        self.predicates
            .iter()
            .all(|p| p.allowed[view.coordinate(index, p.column)])
    }

    /// Flat indices of matching cells, ascending.
    pub fn matching_cells(&self, view: &DiscretizedView) -> Vec<u32> {
        (0..view.size())
            .filter(|&i| self.matches(view, i))
            .map(|i| i as u32)
            .collect()
    }

    pub fn evaluate(&self, view: &DiscretizedView, weights: &[f64]) -> f64 {
        (0..view.size())
            .filter(|&i| self.matches(view, i))
            .map(|i| weights[i])
            .sum()
    }
}

fn random_predicate(column: usize, cells: usize, categorical: bool, rng: &mut Rng) -> ColumnPredicate {
    let allowed = if categorical {
        // nonempty proper subset
        loop {
            let set: Vec<bool> = (0..cells).map(|_| rng.gen_bool(0.5)).collect();
            let k = set.iter().filter(|&&b| b).count();
            if k > 0 && k < cells {
                break set;
            }
        }
    } else {
        // proper interval of bins
        loop {
            let a = rng.gen_range(0..cells);
            let b = rng.gen_range(0..cells);
            let (lo, hi) = (a.min(b), a.max(b));
            if hi - lo + 1 < cells {
                break (0..cells).map(|c| c >= lo && c <= hi).collect();
            }
        }
    };
    ColumnPredicate { column, allowed }
}

/// Random 1- to 3-way marginal queries: set membership on categorical
/// columns, bin ranges on continuous ones. Duplicates are discarded, so the
/// result may be shorter than `count` on tiny domains.
pub fn build_workload(view: &DiscretizedView, count: usize, rng: &mut Rng) -> Result<Vec<LinearQuery>> {
    if view.size() <= 1 {
        return Err(Error::DomainTooSmall);
    }
    if count == 0 {
        return Err(Error::NonPositiveParameter {
            name: "queries_per_workload",
            value: 0.0,
        });
    }
    let eligible: Vec<usize> = view
        .radices()
        .iter()
        .enumerate()
        .filter(|(_, &r)| r >= 2)
        .map(|(i, _)| i)
        .collect();
    let max_way = eligible.len().min(3);
    let columns = view.schema().columns();

    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < count * 50 {
        attempts += 1;
        let way = rng.gen_range(1..=max_way);
        let picked = sample(rng, eligible.len(), way);
        let predicates = picked
            .iter()
            .map(|k| {
                let col = eligible[k];
                random_predicate(col, view.radices()[col], columns[col].is_categorical(), rng)
            })
            .collect();
        let q = LinearQuery::new(predicates);
        if seen.insert(q.clone()) {
            out.push(q);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{ColumnSchema, Schema, MAX_FLAT_CELLS};

    fn view(columns: Vec<ColumnSchema>) -> DiscretizedView {
        DiscretizedView::new(&Schema::new(columns).unwrap(), MAX_FLAT_CELLS).unwrap()
    }

    #[test]
    fn two_by_two_distinct() {
        let v = view(vec![
            ColumnSchema::categorical("a", 2),
            ColumnSchema::categorical("b", 2),
        ]);
        let w = build_workload(&v, 4, &mut Rng::new(1)).unwrap();
        assert_eq!(w.len(), 4);
        let set: HashSet<_> = w.iter().collect();
        assert_eq!(set.len(), 4);
        assert_eq!(w, build_workload(&v, 4, &mut Rng::new(1)).unwrap());
    }

    #[test]
    fn never_identically_zero() {
        let v = view(vec![
            ColumnSchema::categorical("a", 3),
            ColumnSchema::continuous("b", 0.0, 1.0, 4),
            ColumnSchema::categorical("c", 2),
            ColumnSchema::categorical("d", 1),
        ]);
        let w = build_workload(&v, 200, &mut Rng::new(2)).unwrap();
        assert!(!w.is_empty());
        for q in &w {
            assert!(!q.matching_cells(&v).is_empty());
            assert!((1..=3).contains(&q.predicates().len()));
            // never constrains the single-cell column
            assert!(q.predicates().iter().all(|p| p.column != 3));
        }
    }

    #[test]
    fn full_query_on_uniform() {
        let v = view(vec![
            ColumnSchema::categorical("a", 2),
            ColumnSchema::categorical("b", 2),
        ]);
        let uniform = vec![0.25; 4];
        assert_eq!(LinearQuery::full().evaluate(&v, &uniform), 1.0);
    }

    #[test]
    fn single_cell_domain() {
        let v = view(vec![ColumnSchema::categorical("a", 1)]);
        assert!(matches!(
            build_workload(&v, 3, &mut Rng::new(0)),
            Err(Error::DomainTooSmall)
        ));
    }

    #[test]
    fn small_domain_saturates() {
        // one binary column admits exactly two proper subsets
        let v = view(vec![ColumnSchema::categorical("a", 2)]);
        let w = build_workload(&v, 10, &mut Rng::new(0)).unwrap();
        assert_eq!(w.len(), 2);
    }
}
