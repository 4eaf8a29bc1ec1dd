//! CSV and JSON emission of result tables.

use std::io::Write;

use anyhow::Result;
use serde_json::{Map, Value};

use crate::args::Format;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Num(f64),
    Flag(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match *self {
            Cell::Num(v) => format_number(v),
            Cell::Flag(b) => (b as u8).to_string(),
        }
    }

    fn json(&self) -> Value {
        match *self {
            Cell::Num(v) => serde_json::Number::from_f64(v + 0.0).map_or(Value::Null, Value::Number),
            Cell::Flag(b) => Value::Bool(b),
        }
    }
}

/// Shortest round-trip decimal, switching to exponent form for very large
/// or small magnitudes. Independent of the process locale.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    // Adding zero maps -0 to 0.
    let v = v + 0.0;
    let a = v.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub units: String,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>, units: impl Into<String>) -> Self {
        Self {
            columns,
            units: units.into(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: &mut W, hash: &str) -> Result<()> {
        writeln!(w, "# config-hash={hash} units={}", self.units)?;
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(Cell::csv))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: &mut W, hash: &str, config: Value) -> Result<()> {
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                for (name, cell) in self.columns.iter().zip(row) {
                    m.insert((*name).to_string(), cell.json());
                }
                Value::Object(m)
            })
            .collect();
        let mut top = Map::new();
        let mut cfg = match config {
            Value::Object(m) => m,
            other => {
                let mut m = Map::new();
                m.insert("value".into(), other);
                m
            }
        };
        cfg.insert("config_hash".into(), Value::String(hash.into()));
        cfg.insert("units".into(), Value::String(self.units.clone()));
        top.insert("config".into(), Value::Object(cfg));
        top.insert("records".into(), Value::Array(records));
        serde_json::to_writer_pretty(&mut *w, &Value::Object(top))?;
        writeln!(w)?;
        Ok(())
    }

    pub fn write<W: Write>(&self, w: &mut W, format: Format, hash: &str, config: Value) -> Result<()> {
        match format {
            Format::Csv => self.write_csv(w, hash),
            Format::Json => self.write_json(w, hash, config),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        assert_eq!(format_number(0.814), "0.814");
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(-3.5), "-3.5");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(2.5e-9), "2.5e-9");
        assert_eq!(format_number(f64::NAN), "nan");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(vec!["x", "ok"], "x:nm");
        t.push(vec![Cell::Num(1.5), Cell::Flag(true)]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf, "abc").unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "# config-hash=abc units=x:nm\nx,ok\n1.5,1\n");
    }

    #[test]
    fn json_layout() {
        let mut t = Table::new(vec!["x"], "x:nm");
        t.push(vec![Cell::Num(2.0)]);
        let mut buf = Vec::new();
        t.write_json(&mut buf, "abc", serde_json::json!({"l_nm": 220.0})).unwrap();
        let v: Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["config"]["config_hash"], "abc");
        assert_eq!(v["config"]["l_nm"], 220.0);
        assert_eq!(v["records"][0]["x"], 2.0);
    }
}
