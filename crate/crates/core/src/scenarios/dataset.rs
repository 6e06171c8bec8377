//! Persisted scenario output: a `metadata.json` sidecar plus one CSV per table.
//!
//! Series tables are column-oriented with a header row. Grid tables hold a
//! matrix whose first row is the real axis and whose first column is the
//! imaginary axis.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const METADATA_FILE: &str = "metadata.json";
const GRID_CORNER: &str = "im\\re";

#[derive(Debug, Clone, PartialEq)]
pub enum TableData {
    Series { columns: Vec<(String, Vec<f64>)> },
    Grid { re_axis: Vec<f64>, im_axis: Vec<f64>, values: DMatrix<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub data: TableData,
}

impl Table {
    pub fn series(name: impl Into<String>, columns: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let name = name.into();
        if let Some(first) = columns.first() {
            if let Some((bad, col)) = columns.iter().find(|(_, c)| c.len() != first.1.len()) {
                return Err(Error::Schema(format!(
                    "table `{name}`: column `{bad}` has {} rows, expected {}",
                    col.len(),
                    first.1.len()
                )));
            }
        }
        Ok(Self { name, data: TableData::Series { columns } })
    }

    pub fn grid(name: impl Into<String>, re_axis: Vec<f64>, im_axis: Vec<f64>, values: DMatrix<f64>) -> Result<Self> {
        let name = name.into();
        if values.shape() != (im_axis.len(), re_axis.len()) {
            return Err(Error::Schema(format!("table `{name}`: grid shape does not match its axes")));
        }
        Ok(Self { name, data: TableData::Grid { re_axis, im_axis, values } })
    }

    pub fn kind(&self) -> TableKind {
        match self.data {
            TableData::Series { .. } => TableKind::Series,
            TableData::Grid { .. } => TableKind::Grid,
        }
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        match &self.data {
            TableData::Series { columns } => columns.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice()),
            TableData::Grid { .. } => None,
        }
    }

    pub fn column_names(&self) -> Vec<&str> {
        match &self.data {
            TableData::Series { columns } => columns.iter().map(|(n, _)| n.as_str()).collect(),
            TableData::Grid { .. } => Vec::new(),
        }
    }

    fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        match &self.data {
            TableData::Series { columns } => {
                w.write_record(columns.iter().map(|(n, _)| n.as_str()))?;
                let rows = columns.first().map_or(0, |(_, c)| c.len());
                for r in 0..rows {
                    w.write_record(columns.iter().map(|(_, c)| c[r].to_string()))?;
                }
            }
            TableData::Grid { re_axis, im_axis, values } => {
                let header = std::iter::once(GRID_CORNER.to_string()).chain(re_axis.iter().map(f64::to_string));
                w.write_record(header)?;
                for (i, im) in im_axis.iter().enumerate() {
                    let row = std::iter::once(im.to_string()).chain((0..re_axis.len()).map(|j| values[(i, j)].to_string()));
                    w.write_record(row)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    fn read_csv(name: &str, kind: TableKind, path: &Path) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
        let mut records = r.records();
        let header: Vec<String> = match records.next() {
            Some(rec) => rec?.iter().map(str::to_string).collect(),
            None => return Err(Error::Schema(format!("table `{name}` is empty"))),
        };
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Schema(format!("table `{name}`: bad number `{s}`")));
        let mut rows = Vec::new();
        for rec in records {
            let rec = rec?;
            rows.push(rec.iter().map(parse).collect::<Result<Vec<f64>>>()?);
        }
        match kind {
            TableKind::Series => {
                let columns = header
                    .iter()
                    .enumerate()
                    .map(|(j, h)| (h.clone(), rows.iter().map(|row| row[j]).collect()))
                    .collect();
                Table::series(name, columns)
            }
            TableKind::Grid => {
                if header.first().map(String::as_str) != Some(GRID_CORNER) {
                    return Err(Error::Schema(format!("table `{name}` is not a grid")));
                }
                let re_axis = header[1..].iter().map(|s| parse(s)).collect::<Result<Vec<_>>>()?;
                let im_axis: Vec<f64> = rows.iter().map(|row| row[0]).collect();
                let values = DMatrix::from_fn(rows.len(), re_axis.len(), |i, j| rows[i][j + 1]);
                Table::grid(name, re_axis, im_axis, values)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    Series,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub name: String,
    pub kind: TableKind,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub scenario: String,
    pub description: String,
    pub version: String,
    /// Seconds since the Unix epoch when the run finished.
    pub created_unix: u64,
    pub seed: u64,
    /// Every resolved parameter, defaults included.
    pub parameters: serde_json::Value,
    pub tables: Vec<TableEntry>,
    /// Scalar run diagnostics (integration step, drifts, extrema, ...).
    pub diagnostics: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub metadata: Metadata,
    pub tables: Vec<Table>,
}

impl Dataset {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn diagnostic(&self, key: &str) -> Option<f64> {
        self.metadata.diagnostics.get(key).and_then(serde_json::Value::as_f64)
    }

    /// Writes `metadata.json` and the CSV tables into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for table in &self.tables {
            table.write_csv(&dir.join(table.file_name()))?;
        }
        let text = serde_json::to_string_pretty(&self.metadata)?;
        fs::write(dir.join(METADATA_FILE), text + "\n")?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(METADATA_FILE);
        let text = fs::read_to_string(&path)
            .map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.display())))?;
        let metadata: Metadata = serde_json::from_str(&text)?;
        let tables = metadata
            .tables
            .iter()
            .map(|entry| Table::read_csv(&entry.name, entry.kind, &dir.join(&entry.file)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { metadata, tables })
    }
}

pub(crate) fn table_entries(tables: &[Table]) -> Vec<TableEntry> {
    tables.iter().map(|t| TableEntry { name: t.name.clone(), kind: t.kind(), file: t.file_name() }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnDifference {
    /// `table/column`, or just `table` for grids.
    pub column: String,
    pub max_abs_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub columns: Vec<ColumnDifference>,
}

impl CompareReport {
    pub fn max_difference(&self) -> f64 {
        self.columns.iter().map(|c| c.max_abs_difference).fold(0.0, f64::max)
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_difference() <= tolerance
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| if x == y { 0.0 } else { (x - y).abs() })
        .map(|d| if d.is_nan() { f64::INFINITY } else { d })
        .fold(0.0, f64::max)
}

/// Per-column maximum absolute difference. Tables, columns and lengths must match.
pub fn compare_datasets(a: &Dataset, b: &Dataset) -> Result<CompareReport> {
    let names = |d: &Dataset| d.tables.iter().map(|t| (t.name.clone(), t.kind())).collect::<Vec<_>>();
    if names(a) != names(b) {
        return Err(Error::Schema(format!("tables differ: {:?} vs {:?}", names(a), names(b))));
    }
    let mut columns = Vec::new();
    for (ta, tb) in a.tables.iter().zip(&b.tables) {
        match (&ta.data, &tb.data) {
            (TableData::Series { columns: ca }, TableData::Series { columns: cb }) => {
                if ta.column_names() != tb.column_names() {
                    return Err(Error::Schema(format!("table `{}`: columns differ", ta.name)));
                }
                for ((name, va), (_, vb)) in ca.iter().zip(cb) {
                    if va.len() != vb.len() {
                        return Err(Error::Schema(format!("table `{}`: column `{name}` lengths differ", ta.name)));
                    }
                    columns.push(ColumnDifference { column: format!("{}/{name}", ta.name), max_abs_difference: max_diff(va, vb) });
                }
            }
            (
                TableData::Grid { re_axis: ra, im_axis: ia, values: va },
                TableData::Grid { re_axis: rb, im_axis: ib, values: vb },
            ) => {
                if va.shape() != vb.shape() || max_diff(ra, rb) > 1e-12 || max_diff(ia, ib) > 1e-12 {
                    return Err(Error::Schema(format!("table `{}`: grid axes differ", ta.name)));
                }
                columns.push(ColumnDifference {
                    column: ta.name.clone(),
                    max_abs_difference: max_diff(va.as_slice(), vb.as_slice()),
                });
            }
            _ => unreachable!("kinds checked above"),
        }
    }
    Ok(CompareReport { columns })
}
