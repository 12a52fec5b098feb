//! CSV and JSON emission shared by all reports.
//!
//! Every CSV file starts with one comment line
//! `# kind=<kind> schema_version=<v> [key=value ...]` followed by a header row.
//! Floats are written with 17 significant digits so values round-trip exactly.
//! JSON documents carry `kind` and `schema_version` at the top level.

use std::io;
use std::path::Path;

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Round-trip-exact float formatting (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
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

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
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

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => fmt_f64(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

/// A CSV table with a schema comment line.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub kind: String,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(kind: &str, columns: &[&str]) -> Self {
        Table {
            kind: kind.to_string(),
            meta: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width for {}", self.kind);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut head = format!("# kind={} schema_version={SCHEMA_VERSION}", self.kind);
        for (k, v) in &self.meta {
            // Meta values are single tokens; spaces would break `key=value` parsing.
            head.push_str(&format!(" {k}={}", v.replace(char::is_whitespace, "_")));
        }
        head.push('\n');
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
        }
        let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells");
        head + &body
    }

    pub fn write(&self, path: impl AsRef<Path>) -> io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}

/// JSON envelope: `{"kind", "schema_version", "data"}`.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub kind: &'a str,
    pub schema_version: u32,
    pub data: &'a T,
}

pub fn to_json<T: Serialize>(kind: &str, data: &T) -> String {
    serde_json::to_string_pretty(&Envelope {
        kind,
        schema_version: SCHEMA_VERSION,
        data,
    })
    .expect("report types serialize")
}

/// Parses the leading `# kind=... schema_version=...` line of a CSV report.
pub fn parse_schema_line(csv: &str) -> Option<(String, u32)> {
    let line = csv.lines().next()?.strip_prefix('#')?;
    let mut kind = None;
    let mut version = None;
    for tok in line.split_whitespace() {
        match tok.split_once('=') {
            Some(("kind", v)) => kind = Some(v.to_string()),
            Some(("schema_version", v)) => version = v.parse().ok(),
            _ => {}
        }
    }
    Some((kind?, version?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, f64::MIN_POSITIVE] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new("demo", &["a", "b", "name"]).meta("pair", "ssprk3/standard");
        t.push(vec![1.5.into(), 3usize.into(), "x,y".into()]);
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("# kind=demo schema_version=1 pair=ssprk3/standard"));
        assert_eq!(lines.next(), Some("a,b,name"));
        assert_eq!(lines.next(), Some("1.5000000000000000e0,3,\"x,y\""));
        assert_eq!(parse_schema_line(&csv), Some(("demo".to_string(), 1)));
    }

    #[test]
    fn json_envelope() {
        let j = to_json("scalars", &serde_json::json!({"p": 0}));
        let v: serde_json::Value = serde_json::from_str(&j).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["kind"], "scalars");
        assert_eq!(v["data"]["p"], 0);
    }
}
