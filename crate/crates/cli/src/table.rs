//! Versioned output tables, written as CSV or JSON with identical fields.

use std::io::Write;

use serde::Serialize;
use serde_json::value::RawValue;

/// Bumped whenever a column set changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => format!("{v:.16e}"),
            Cell::Num(_) => "nan".into(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => format!("{v:.16e}"),
            Cell::Num(_) => "null".into(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => serde_json::to_string(s).expect("string serializes"),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    /// Run parameters, echoed in the header comment.
    pub meta: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Self {
            name,
            meta: Vec::new(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "{}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub fn write_csv(tables: &[Table], out: &mut dyn Write) -> std::io::Result<()> {
    for (i, t) in tables.iter().enumerate() {
        if i > 0 {
            writeln!(out)?;
        }
        let meta: Vec<String> = t.meta.iter().map(|(k, v)| format!("{k}={v}")).collect();
        writeln!(out, "# rabi.{} v{} {}", t.name, SCHEMA_VERSION, meta.join(" "))?;
        let mut w = csv::Writer::from_writer(&mut *out);
        w.write_record(&t.columns)?;
        for row in &t.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.flush()?;
    }
    Ok(())
}

#[derive(Serialize)]
struct JsonTable<'a> {
    table: String,
    version: u32,
    meta: Vec<(&'a str, &'a str)>,
    columns: &'a [&'static str],
    rows: Vec<Vec<Box<RawValue>>>,
}

pub fn write_json(tables: &[Table], out: &mut dyn Write) -> std::io::Result<()> {
    let doc: Vec<JsonTable> = tables
        .iter()
        .map(|t| JsonTable {
            table: format!("rabi.{}", t.name),
            version: SCHEMA_VERSION,
            meta: t.meta.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect(),
            columns: &t.columns,
            rows: t
                .rows
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|c| RawValue::from_string(c.json()).expect("valid JSON literal"))
                        .collect()
                })
                .collect(),
        })
        .collect();
    serde_json::to_writer_pretty(&mut *out, &doc)?;
    writeln!(out)
}
