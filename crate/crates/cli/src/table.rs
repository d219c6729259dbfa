//! Result tables and their CSV and JSON renderings.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Self::Empty, Self::Num)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::Int(v as u64)
    }
}

impl From<Option<usize>> for Cell {
    fn from(v: Option<usize>) -> Self {
        v.map_or(Self::Empty, |n| Self::Int(n as u64))
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Self::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Self::Text(v.to_string())
    }
}

impl Cell {
    /// CSV text. Floats carry 17 significant digits.
    pub fn csv(&self) -> String {
        match self {
            Self::Num(x) if x.is_finite() => format!("{x:.16e}"),
            Self::Num(x) => x.to_string(),
            Self::Int(n) => n.to_string(),
            Self::Bool(b) => b.to_string(),
            Self::Text(s) => s.clone(),
            Self::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Self::Num(x) if x.is_finite() => json!(x),
            Self::Num(_) | Self::Empty => Value::Null,
            Self::Int(n) => json!(n),
            Self::Bool(b) => json!(b),
            Self::Text(s) => json!(s),
        }
    }
}

/// Header facts emitted ahead of every table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
}

impl Metadata {
    pub fn new(command: &str, config_sha256: String) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_sha256,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub metadata: Metadata,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(metadata: Metadata, columns: Vec<String>) -> Self {
        Self {
            metadata,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width does not match the header"
        );
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write_csv(&self, out: &mut dyn Write) -> Result<(), CliError> {
        let m = &self.metadata;
        writeln!(out, "# tool: {} {}", m.tool, m.version)?;
        writeln!(out, "# command: {}", m.command)?;
        writeln!(out, "# config_sha256: {}", m.config_sha256)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "metadata": self.metadata,
            "columns": self.columns,
            "rows": self.rows.iter().map(|r| r.iter().map(Cell::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }

    pub fn write_json(&self, out: &mut dyn Write) -> Result<(), CliError> {
        write_json(&self.to_json(), out)
    }
}

pub fn write_json<T: Serialize>(value: &T, out: &mut dyn Write) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| CliError::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Table {
        let mut t = Table::new(
            Metadata::new("dist", "ab".repeat(32)),
            vec!["n".into(), "p_n".into(), "note".into()],
        );
        t.push(vec![0usize.into(), (1.0 / 3.0).into(), Cell::Empty]);
        t.push(vec![1usize.into(), 0.1.into(), "a,b".into()]);
        t
    }

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(Cell::Num(1.0 / 3.0).csv(), "3.3333333333333331e-1");
        assert_eq!(Cell::Num(0.1).csv().parse::<f64>().unwrap(), 0.1);
        assert_eq!(Cell::Num(0.0).csv(), "0.0000000000000000e0");
    }

    #[test]
    fn csv_has_metadata_then_one_header() {
        let mut buf = Vec::new();
        table().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[..3].iter().all(|l| l.starts_with("# ")));
        assert_eq!(lines[3], "n,p_n,note");
        assert_eq!(lines[4], "0,3.3333333333333331e-1,");
        assert_eq!(lines[5], "1,1.0000000000000001e-1,\"a,b\"");
    }

    #[test]
    fn json_uses_null_for_missing_cells() {
        let v = table().to_json();
        assert_eq!(v["rows"][0][2], Value::Null);
        assert_eq!(v["columns"][1], "p_n");
        assert_eq!(v["metadata"]["command"], "dist");
    }
}
