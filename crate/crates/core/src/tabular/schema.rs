use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BINS: u32 = 10;

fn default_bins() -> u32 {
    DEFAULT_BINS
}

/// Value domain of one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColumnKind {
    /// Integer codes `0..cardinality`.
    Categorical { cardinality: u32 },
    /// Reals in `[lower, upper]`, discretized into `bins` equal-width cells.
    Continuous {
        lower: f64,
        upper: f64,
        #[serde(default = "default_bins")]
        bins: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    #[serde(flatten)]
    pub kind: ColumnKind,
}

impl ColumnSchema {
    pub fn categorical(name: impl Into<String>, cardinality: u32) -> Self {
        ColumnSchema {
            name: name.into(),
            kind: ColumnKind::Categorical { cardinality },
        }
    }

    pub fn continuous(name: impl Into<String>, lower: f64, upper: f64, bins: u32) -> Self {
        ColumnSchema {
            name: name.into(),
            kind: ColumnKind::Continuous { lower, upper, bins },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ColumnKind::Categorical { cardinality } if cardinality < 1 => Err(
                Error::InvalidSchema(format!("column `{}` needs cardinality >= 1", self.name)),
            ),
            ColumnKind::Continuous { lower, upper, bins } => {
                if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                    Err(Error::InvalidSchema(format!(
                        "column `{}` needs finite lower < upper",
                        self.name
                    )))
                } else if bins < 1 {
                    Err(Error::InvalidSchema(format!(
                        "column `{}` needs bins >= 1",
                        self.name
                    )))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, ColumnKind::Categorical { .. })
    }

    /// Number of discrete cells the column occupies in a flat histogram.
    pub fn cells(&self) -> usize {
        match self.kind {
            ColumnKind::Categorical { cardinality } => cardinality as usize,
            ColumnKind::Continuous { bins, .. } => bins as usize,
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        match self.kind {
            ColumnKind::Categorical { cardinality } => {
                value.fract() == 0.0 && value >= 0.0 && value < f64::from(cardinality)
            }
            ColumnKind::Continuous { lower, upper, .. } => value >= lower && value <= upper,
        }
    }

    /// Cell index of an in-domain value.
    pub fn cell_of(&self, value: f64) -> usize {
        match self.kind {
            ColumnKind::Categorical { .. } => value as usize,
            ColumnKind::Continuous { lower, upper, bins } => {
                let scaled = (value - lower) / (upper - lower) * f64::from(bins);
                (scaled.floor().max(0.0) as usize).min(bins as usize - 1)
            }
        }
    }

    /// Value materialised for a cell: the category code or the bin midpoint.
    pub fn representative(&self, cell: usize) -> f64 {
        match self.kind {
            ColumnKind::Categorical { .. } => cell as f64,
            ColumnKind::Continuous { lower, upper, bins } => {
                let width = (upper - lower) / f64::from(bins);
                lower + (cell as f64 + 0.5) * width
            }
        }
    }

    /// Bin edges (`cells() + 1` values) for continuous columns; empty for categorical.
    pub fn edges(&self) -> Vec<f64> {
        match self.kind {
            ColumnKind::Categorical { .. } => Vec::new(),
            ColumnKind::Continuous { lower, upper, bins } => {
                let width = (upper - lower) / f64::from(bins);
                (0..=bins)
                    .map(|i| {
                        if i == bins {
                            upper
                        } else {
                            lower + f64::from(i) * width
                        }
                    })
                    .collect()
            }
        }
    }

    /// Numeric range spanned by the column's values.
    pub fn value_range(&self) -> (f64, f64) {
        match self.kind {
            ColumnKind::Categorical { cardinality } => (0.0, f64::from(cardinality - 1)),
            ColumnKind::Continuous { lower, upper, .. } => (lower, upper),
        }
    }
}

/// Ordered list of columns with unique names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schema {
    columns: Vec<ColumnSchema>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSchema>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &columns {
            c.validate()?;
            if !seen.insert(c.name.as_str()) {
                return Err(Error::InvalidSchema(format!(
                    "duplicate column name `{}`",
                    c.name
                )));
            }
        }
        Ok(Schema { columns })
    }

    pub fn columns(&self) -> &[ColumnSchema] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&ColumnSchema> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }
}

/// On-disk schema description: `{columns: [...], target: name|null}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaFile {
    pub columns: Vec<ColumnSchema>,
    #[serde(default)]
    pub target: Option<String>,
}

impl SchemaFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn schema(&self) -> Result<Schema> {
        Schema::new(self.columns.clone())
    }
}
