//! Tabular data model: schemas, validated datasets, CSV ingestion,
//! discretization onto a flat histogram domain, stratified splitting, and a
//! synthetic classification-task generator.

mod csv_io;
mod dataset;
mod discretize;
mod generate;
mod schema;
mod split;

pub use csv_io::{load_csv, read_csv, save_csv, write_csv};
pub use dataset::TabularDataset;
pub use discretize::{discretize, DiscretizedView, MAX_FLAT_CELLS};
pub use generate::{generate_classification_data, SyntheticTaskSpec, TARGET_NAME};
pub use schema::{ColumnKind, ColumnSchema, Schema, SchemaFile, DEFAULT_BINS};
pub use split::train_test_split;
