use std::io::{Read, Write};
use std::path::Path;

use super::dataset::TabularDataset;
use super::schema::{ColumnKind, Schema};
use crate::error::{Error, Result};

/// Reads a headed CSV file whose columns are exactly the schema's columns
/// (in any order). Rows keep their file order.
pub fn load_csv(
    path: impl AsRef<Path>,
    schema: &Schema,
    target: Option<&str>,
) -> Result<TabularDataset> {
    let file = std::fs::File::open(path)?;
    read_csv(file, schema, target)
}

pub fn read_csv<R: Read>(reader: R, schema: &Schema, target: Option<&str>) -> Result<TabularDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    for h in headers.iter() {
        if schema.index_of(h).is_none() {
            return Err(Error::UnexpectedColumn(h.to_owned()));
        }
    }
    let positions: Vec<usize> = schema
        .columns()
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h == c.name)
                .ok_or_else(|| Error::MissingColumn(c.name.clone()))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(schema.len());
        for (col, &pos) in schema.columns().iter().zip(&positions) {
            let raw = record.get(pos).unwrap_or("").trim();
            let value: f64 = raw.parse().map_err(|_| Error::UnparseableCell {
                row: r,
                column: col.name.clone(),
                value: raw.to_owned(),
            })?;
            if !col.contains(value) {
                return Err(Error::OutOfDomainValue {
                    row: r,
                    column: col.name.clone(),
                    value,
                });
            }
            row.push(value);
        }
        rows.push(row);
    }
    TabularDataset::new(schema.clone(), rows, target.map(str::to_owned))
}

pub fn write_csv<W: Write>(d: &TabularDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(d.schema().names())?;
    for row in d.rows() {
        let cells = d.schema().columns().iter().zip(row).map(|(c, v)| match c.kind {
            ColumnKind::Categorical { .. } => format!("{}", *v as u64),
            ColumnKind::Continuous { .. } => format!("{v}"),
        });
        w.write_record(cells)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(d: &TabularDataset, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(d, std::io::BufWriter::new(file))
}
