//! CSV ingestion and output. Rows are time points, columns are variables.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::SampleMatrix;

fn parse_cell(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok()
}

/// Reads a comma-separated table. A first row containing any non-numeric
/// cell is taken as a header and skipped.
pub fn read_csv<R: Read>(reader: R) -> Result<SampleMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Format(e.to_string()))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if line == 0 && record.iter().any(|c| parse_cell(c).is_none()) {
            width = Some(record.len());
            continue;
        }
        match width {
            Some(w) if w != record.len() => {
                return Err(Error::Format(format!(
                    "row {} has {} fields, expected {w}",
                    line + 1,
                    record.len()
                )))
            }
            _ => width = Some(record.len()),
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(col, c)| {
                parse_cell(c).ok_or_else(|| {
                    Error::Format(format!("row {}, column {}: not a number: {c:?}", line + 1, col + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.len() < 2 {
        return Err(Error::InvalidData(format!(
            "need at least 2 data rows, found {}",
            rows.len()
        )));
    }
    SampleMatrix::from_rows(&rows)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<SampleMatrix> {
    read_csv(File::open(path)?)
}

/// Writes `data` without a header. Values use the shortest representation
/// that parses back to the same `f64`.
pub fn write_csv<W: Write>(writer: W, data: &Array2<f64>) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().from_writer(writer);
    for row in data.rows() {
        wtr.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| Error::Format(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_csv(path: impl AsRef<Path>, data: &Array2<f64>) -> Result<()> {
    write_csv(File::create(path)?, data)
}
