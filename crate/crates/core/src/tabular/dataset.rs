use serde::{Deserialize, Serialize};

use super::schema::{ColumnKind, ColumnSchema, Schema};
use crate::error::{Error, Result};

/// Schema-typed rows with an optional designated target column.
///
/// Rows are stored as `f64` vectors; categorical cells hold their integer
/// code. Datasets are validated on construction and never mutated afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularDataset {
    schema: Schema,
    rows: Vec<Vec<f64>>,
    target: Option<String>,
}

impl TabularDataset {
    pub fn new(schema: Schema, rows: Vec<Vec<f64>>, target: Option<String>) -> Result<Self> {
        if let Some(t) = &target {
            match schema.column(t) {
                None => return Err(Error::UnknownColumn(t.clone())),
                Some(c) if !c.is_categorical() => {
                    return Err(Error::InvalidSchema(format!(
                        "target `{t}` must be a categorical column"
                    )))
                }
                _ => {}
            }
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::LengthMismatch {
                    expected: schema.len(),
                    actual: row.len(),
                });
            }
            for (col, &v) in schema.columns().iter().zip(row) {
                if !col.contains(v) {
                    return Err(Error::OutOfDomainValue {
                        row: r,
                        column: col.name.clone(),
                        value: v,
                    });
                }
            }
        }
        Ok(TabularDataset {
            schema,
            rows,
            target,
        })
    }

    pub fn empty(schema: Schema, target: Option<String>) -> Result<Self> {
        Self::new(schema, Vec::new(), target)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn target(&self) -> Option<&str> {
        self.target.as_deref()
    }

    pub fn target_index(&self) -> Option<usize> {
        self.target.as_deref().and_then(|t| self.schema.index_of(t))
    }

    /// Number of target classes (the target column's cardinality).
    pub fn n_classes(&self) -> Result<usize> {
        let idx = self.target_index().ok_or(Error::NoTarget)?;
        Ok(self.schema.columns()[idx].cells())
    }

    pub fn target_values(&self) -> Result<Vec<usize>> {
        let idx = self.target_index().ok_or(Error::NoTarget)?;
        Ok(self.rows.iter().map(|r| r[idx] as usize).collect())
    }

    /// Columns other than the target, in schema order.
    pub fn feature_columns(&self) -> Vec<&ColumnSchema> {
        let t = self.target_index();
        self.schema
            .columns()
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != t)
            .map(|(_, c)| c)
            .collect()
    }

    /// Feature-only rows (target removed).
    pub fn feature_rows(&self) -> Vec<Vec<f64>> {
        match self.target_index() {
            None => self.rows.clone(),
            Some(t) => self
                .rows
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|(i, _)| *i != t)
                        .map(|(_, v)| *v)
                        .collect()
                })
                .collect(),
        }
    }

    pub fn with_target(&self, target: Option<&str>) -> Result<Self> {
        Self::new(
            self.schema.clone(),
            self.rows.clone(),
            target.map(str::to_owned),
        )
    }

    /// Copy with `name` removed. Dropping the target clears the designation.
    pub fn drop_column(&self, name: &str) -> Result<Self> {
        let idx = self
            .schema
            .index_of(name)
            .ok_or_else(|| Error::UnknownColumn(name.to_owned()))?;
        let columns = self
            .schema
            .columns()
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(_, c)| c.clone())
            .collect();
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.remove(idx);
                r
            })
            .collect();
        let target = self.target.clone().filter(|t| t != name);
        Ok(TabularDataset {
            schema: Schema::new(columns)?,
            rows,
            target,
        })
    }

    /// Copy with a categorical column of `labels` appended last.
    pub fn append_labels(&self, labels: &[usize], name: &str, cardinality: u32) -> Result<Self> {
        if labels.len() != self.rows.len() {
            return Err(Error::LengthMismatch {
                expected: self.rows.len(),
                actual: labels.len(),
            });
        }
        if let Some((row, &bad)) = labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l >= cardinality as usize)
        {
            return Err(Error::OutOfDomainValue {
                row,
                column: name.to_owned(),
                value: bad as f64,
            });
        }
        let mut columns = self.schema.columns().to_vec();
        columns.push(ColumnSchema {
            name: name.to_owned(),
            kind: ColumnKind::Categorical { cardinality },
        });
        let rows = self
            .rows
            .iter()
            .zip(labels)
            .map(|(r, &l)| {
                let mut r = r.clone();
                r.push(l as f64);
                r
            })
            .collect();
        Ok(TabularDataset {
            schema: Schema::new(columns)?,
            rows,
            target: self.target.clone(),
        })
    }

    /// Projects (and reorders) columns to `names`.
    pub fn select_columns(&self, names: &[&str]) -> Result<Self> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.schema
                    .index_of(n)
                    .ok_or_else(|| Error::UnknownColumn((*n).to_owned()))
            })
            .collect::<Result<_>>()?;
        let columns = idx
            .iter()
            .map(|&i| self.schema.columns()[i].clone())
            .collect();
        let rows = self
            .rows
            .iter()
            .map(|r| idx.iter().map(|&i| r[i]).collect())
            .collect();
        let target = self
            .target
            .clone()
            .filter(|t| names.contains(&t.as_str()));
        Ok(TabularDataset {
            schema: Schema::new(columns)?,
            rows,
            target,
        })
    }

    /// Subset of rows by index, in the given order.
    pub fn take_rows(&self, indices: &[usize]) -> Self {
        TabularDataset {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            target: self.target.clone(),
        }
    }

    /// Checks that `other` has the same columns (names and kinds, in order),
    /// ignoring the target designation.
    pub fn check_same_schema(&self, other: &TabularDataset) -> Result<()> {
        if self.schema != other.schema {
            return Err(Error::SchemaMismatch(format!(
                "columns {:?} vs {:?}",
                self.schema.names(),
                other.schema.names()
            )));
        }
        Ok(())
    }

    pub(crate) fn from_validated(
        schema: Schema,
        rows: Vec<Vec<f64>>,
        target: Option<String>,
    ) -> Self {
        TabularDataset {
            schema,
            rows,
            target,
        }
    }
}
