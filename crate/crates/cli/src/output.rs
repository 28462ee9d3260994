//! CSV and JSON-lines tables. Floats are written in their shortest
//! round-trip form with a dot separator; non-finite values become `NaN`/`inf`
//! in CSV and `null` in JSON.

use std::path::{Path, PathBuf};

use crate::config::{Format, RunConfig};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Str(String),
    Num(f64),
    Int(u64),
    Bool(bool),
    Empty,
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Str(s)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Str(s) => {
                if s.contains([',', '"', '\n']) {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
            Cell::Num(v) => format!("{v:?}"),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Str(s) => serde_json::Value::from(s.as_str()),
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(serde_json::Value::Null, serde_json::Value::Number),
            Cell::Int(v) => serde_json::Value::from(*v),
            Cell::Bool(b) => serde_json::Value::from(*b),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    /// One JSON object per row, keys in header order.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let fields: Vec<String> = self
                .header
                .iter()
                .zip(r)
                .map(|(k, v)| format!("{}:{}", serde_json::Value::from(*k), v.json()))
                .collect();
            out.push('{');
            out.push_str(&fields.join(","));
            out.push_str("}\n");
        }
        out
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Writes `stem.csv` and/or `stem.jsonl` according to the requested formats.
pub fn write_table(cfg: &RunConfig, stem: &str, table: &Table) -> Result<Vec<PathBuf>, CliError> {
    ensure_dir(&cfg.out)?;
    let mut written = Vec::new();
    if cfg.wants(Format::Csv) {
        let p = cfg.out.join(format!("{stem}.csv"));
        write_file(&p, &table.to_csv())?;
        written.push(p);
    }
    if cfg.wants(Format::Json) {
        let p = cfg.out.join(format!("{stem}.jsonl"));
        write_file(&p, &table.to_json_lines())?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats() {
        let mut t = Table::new(&["a", "b", "c"]);
        t.push(vec!["x,y".into(), 0.1.into(), f64::NAN.into()]);
        t.push(vec!["z".into(), 1e-20.into(), Cell::Empty]);
        assert_eq!(t.to_csv(), "a,b,c\n\"x,y\",0.1,NaN\nz,1e-20,\n");
        assert_eq!(t.to_json_lines(), "{\"a\":\"x,y\",\"b\":0.1,\"c\":null}\n{\"a\":\"z\",\"b\":1e-20,\"c\":null}\n");
    }
}
