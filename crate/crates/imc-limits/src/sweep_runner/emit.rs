//! Result tables and their CSV/JSON encodings. Both encodings are
//! byte-stable: no timestamps, fixed column order, shortest round-trip floats.

use crate::{Error, Result};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    /// Unit symbol; `"1"` for dimensionless numbers, `"label"` for text.
    pub unit: String,
}

impl Column {
    pub fn new(name: &str, unit: &str) -> Self {
        Self { name: name.into(), unit: unit.into() }
    }

    pub fn header(&self) -> String {
        format!("{}[{}]", self.name, self.unit)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    /// CSV text. Non-finite numbers are written as `inf`, `-inf`, `NaN`.
    pub fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => format!("{v}"),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(v) => Some(*v as f64),
            Cell::Num(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cell::Int(v) => s.serialize_i64(*v),
            Cell::Num(v) if v.is_finite() => s.serialize_f64(*v),
            Cell::Num(v) => s.serialize_str(&format!("{v}")),
            Cell::Text(t) => s.serialize_str(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub experiment: String,
    pub seed: u64,
    /// SHA-256 of the technology profile(s) used.
    pub profile_hash: String,
    pub tool_version: String,
    /// Free-form run settings (estimator, trial counts).
    pub settings: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    pub metadata: Metadata,
}

impl ResultTable {
    pub fn new(columns: Vec<Column>, metadata: Metadata) -> Self {
        Self { columns, rows: Vec::new(), metadata }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::LengthMismatch { what: "row vs columns", left: row.len(), right: self.columns.len() });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Numeric values of a column, `None` for text cells.
    pub fn values(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.column(name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64()).collect())
    }
}

impl Serialize for ResultTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(3))?;
        m.serialize_entry("columns", &self.columns)?;
        m.serialize_entry("rows", &self.rows)?;
        m.serialize_entry("metadata", &self.metadata)?;
        m.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

pub fn to_csv(table: &ResultTable) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Config(format!("csv encoding: {e}"));
    w.write_record(table.columns.iter().map(Column::header)).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render)).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv encoding: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn to_json(table: &ResultTable) -> Result<String> {
    let mut s = serde_json::to_string_pretty(table).map_err(|e| Error::Config(format!("json encoding: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn metadata_json(meta: &Metadata) -> String {
    let mut s = serde_json::to_string_pretty(meta).expect("metadata serializes");
    s.push('\n');
    s
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

/// Writes the table. CSV output gets its metadata in `<path>.meta.json`.
pub fn emit(table: &ResultTable, format: Format, path: &Path) -> Result<()> {
    match format {
        Format::Csv => {
            write(path, &to_csv(table)?)?;
            let mut meta = path.as_os_str().to_owned();
            meta.push(".meta.json");
            write(Path::new(&meta), &metadata_json(&table.metadata))
        }
        Format::Json => write(path, &to_json(table)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> Metadata {
        Metadata {
            experiment: "t".into(),
            seed: 7,
            profile_hash: "abc".into(),
            tool_version: "0".into(),
            settings: BTreeMap::new(),
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = ResultTable::new(vec![Column::new("n", "1"), Column::new("snr", "dB")], meta());
        assert_eq!(to_csv(&t).unwrap(), "n[1],snr[dB]\r\n");
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut t = ResultTable::new(vec![Column::new("label", "label"), Column::new("x", "V")], meta());
        let vals = [0.1 + 0.2, 1e-300, -3.141592653589793, 123456789.123456789, f64::INFINITY];
        for (i, &v) in vals.iter().enumerate() {
            t.push(vec![format!("row, \"{i}\"").into(), v.into()]).unwrap();
        }
        let text = to_csv(&t).unwrap();
        let mut r = csv::Reader::from_reader(text.as_bytes());
        for (rec, &v) in r.records().zip(&vals) {
            let rec = rec.unwrap();
            assert!(rec[0].starts_with("row, \""));
            assert_eq!(rec[1].parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn json_has_metadata_and_string_infinities() {
        let mut t = ResultTable::new(vec![Column::new("x", "dB")], meta());
        t.push(vec![f64::INFINITY.into()]).unwrap();
        let j: serde_json::Value = serde_json::from_str(&to_json(&t).unwrap()).unwrap();
        assert_eq!(j["metadata"]["seed"], 7);
        assert_eq!(j["metadata"]["profile_hash"], "abc");
        assert_eq!(j["rows"][0][0], "inf");
    }

    #[test]
    fn row_length_checked() {
        let mut t = ResultTable::new(vec![Column::new("x", "1")], meta());
        assert!(t.push(vec![]).is_err());
    }
}
