//! Tables plus the run spec, written as CSV or JSON.
//!
//! CSV: the spec as `# key=value` comment lines, then each table as a
//! `# table: name` line, a header row and the data rows, tables separated by
//! a blank line. Numbers carry 10 significant digits.
//!
//! JSON: `{"spec": {...}, "tables": {"name": [{column: value, ...}, ...]}}`,
//! numbers in the shortest form that reads back to the same double.

use std::io::Write;

use serde_json::{json, Map, Value};

use crate::error::CliError;
use crate::spec::{Format, RunSpec};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
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

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
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

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => format!("{v:.9e}"),
            Cell::Num(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub spec: RunSpec,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(spec: &RunSpec) -> Self {
        Report {
            spec: spec.clone(),
            tables: Vec::new(),
        }
    }

    pub fn add(&mut self, t: Table) {
        self.tables.push(t);
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for line in self.spec.to_config().lines() {
            s.push_str("# ");
            s.push_str(line);
            s.push('\n');
        }
        for (k, t) in self.tables.iter().enumerate() {
            if k > 0 {
                s.push('\n');
            }
            s.push_str(&format!("# table: {}\n", t.name));
            s.push_str(&t.columns.join(","));
            s.push('\n');
            for r in &t.rows {
                let cells: Vec<String> = r.iter().map(Cell::csv).collect();
                s.push_str(&cells.join(","));
                s.push('\n');
            }
        }
        s
    }

    pub fn to_json(&self) -> String {
        let mut tables = Map::new();
        for t in &self.tables {
            let rows: Vec<Value> = t
                .rows
                .iter()
                .map(|r| {
                    let mut obj = Map::new();
                    for (c, v) in t.columns.iter().zip(r) {
                        obj.insert(c.clone(), v.json());
                    }
                    Value::Object(obj)
                })
                .collect();
            tables.insert(t.name.clone(), Value::Array(rows));
        }
        let doc = json!({ "spec": self.spec, "tables": tables });
        let mut s = serde_json::to_string_pretty(&doc).expect("plain values serialize");
        s.push('\n');
        s
    }

    pub fn render(&self) -> String {
        match self.spec.format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    /// Writes to `spec.out`, or to stdout when it is unset.
    pub fn emit(&self) -> Result<(), CliError> {
        let text = self.render();
        match &self.spec.out {
            Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{path}: {e}"))),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())?;
                out.flush()?;
                Ok(())
            }
        }
    }
}
