use super::dataset::TabularDataset;
use super::schema::Schema;
use crate::error::{Error, Result};

/// Largest flat domain a histogram may cover.
pub const MAX_FLAT_CELLS: u64 = 10_000_000;

/// Mixed-radix indexing of a schema's discretized domain.
///
/// Each column contributes `cells()` positions (category codes or
/// equal-width bins). Cells are flattened row-major, with the last column
/// varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedView {
    schema: Schema,
    radices: Vec<usize>,
    strides: Vec<usize>,
    edges: Vec<Vec<f64>>,
    size: usize,
}

impl DiscretizedView {
    /// Fails with `DomainTooLarge` when the flat domain exceeds `cap` cells.
    pub fn new(schema: &Schema, cap: u64) -> Result<Self> {
        let radices: Vec<usize> = schema.columns().iter().map(|c| c.cells()).collect();
        let total: u128 = radices.iter().map(|&r| r as u128).product();
        if total > u128::from(cap) {
            return Err(Error::DomainTooLarge { cells: total, cap });
        }
        let mut strides = vec![1usize; radices.len()];
        for i in (0..radices.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * radices[i + 1];
        }
        Ok(DiscretizedView {
            schema: schema.clone(),
            edges: schema.columns().iter().map(|c| c.edges()).collect(),
            radices,
            strides,
            size: total as usize,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    /// Number of cells in the flat domain.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Per-column cell counts.
    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    /// Bin edges of each continuous column (empty for categorical columns).
    pub fn edges(&self) -> &[Vec<f64>] {
        &self.edges
    }

    pub fn cell_index(&self, row: &[f64]) -> usize {
        self.schema
            .columns()
            .iter()
            .zip(row)
            .zip(&self.strides)
            .map(|((c, &v), &s)| c.cell_of(v) * s)
            .sum()
    }

    pub fn index_of_cells(&self, cells: &[usize]) -> usize {
        cells.iter().zip(&self.strides).map(|(c, s)| c * s).sum()
    }

    pub fn cells_of_index(&self, mut index: usize) -> Vec<usize> {
        self.strides
            .iter()
            .map(|&s| {
                let c = index / s;
                index %= s;
                c
            })
            .collect()
    }

    /// Cell coordinate of `index` along column `col`.
    pub fn coordinate(&self, index: usize, col: usize) -> usize {
        (index / self.strides[col]) % self.radices[col]
    }

    /// Concrete row for a cell: category codes and bin midpoints.
    pub fn representative(&self, index: usize) -> Vec<f64> {
        self.cells_of_index(index)
            .into_iter()
            .zip(self.schema.columns())
            .map(|(cell, c)| c.representative(cell))
            .collect()
    }
}

/// Histogram of a dataset over its discretized domain.
pub fn discretize(d: &TabularDataset) -> Result<(DiscretizedView, Vec<u64>)> {
    let view = DiscretizedView::new(d.schema(), MAX_FLAT_CELLS)?;
    let mut counts = vec![0u64; view.size()];
    for row in d.rows() {
        counts[view.cell_index(row)] += 1;
    }
    Ok((view, counts))
}
