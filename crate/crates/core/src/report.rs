//! Reports: named tables plus verdicts, written as JSON and one CSV per table.
//!
//! CSV files are UTF-8 with a header row and LF line endings. Numbers are
//! printed with 12 significant digits in `%g` style, so identical inputs give
//! identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::ser::{Serialize, Serializer};
use serde_json::Value;

use crate::sequences::Verdict;

pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn to_csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format_g(*x, SIGNIFICANT_DIGITS),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<u64> for Cell {
    fn from(i: u64) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(if b { "true" } else { "false" }.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Int(i) => s.serialize_i64(*i),
            Cell::Num(x) if x.is_finite() => s.serialize_f64(*x),
            Cell::Num(x) => s.serialize_str(&format_g(*x, SIGNIFICANT_DIGITS)),
            Cell::Text(t) => s.serialize_str(t),
            Cell::Empty => s.serialize_none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_columns(name: impl Into<String>, columns: Vec<String>) -> Self {
        Table {
            name: name.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width in table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[idx]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_csv)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct VerdictEntry {
    pub verdict: Verdict,
    pub witness: Value,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config: Value,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Report {
    pub metadata: Metadata,
    pub tables: Vec<Table>,
    pub verdicts: BTreeMap<String, VerdictEntry>,
}

impl Report {
    pub fn new(seed: u64, config: Value) -> Self {
        Report {
            metadata: Metadata {
                tool: env!("CARGO_PKG_NAME").to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed,
                config,
            },
            tables: Vec::new(),
            verdicts: BTreeMap::new(),
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn verdict(&self, name: &str) -> Option<Verdict> {
        self.verdicts.get(name).map(|v| v.verdict)
    }

    pub fn add_verdict(&mut self, name: &str, verdict: Verdict, witness: Value) {
        self.verdicts
            .insert(name.to_string(), VerdictEntry { verdict, witness });
    }

    pub fn any_undecided(&self) -> bool {
        self.verdicts.values().any(|v| v.verdict == Verdict::Undecided)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn emit_csv(table: &Table, path: &Path) -> io::Result<()> {
    fs::write(path, table.to_csv())
}

/// Writes `report.json` and `<table>.csv` for every table into `dir`.
pub fn write_report(report: &Report, dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), report.to_json())?;
    for t in &report.tables {
        emit_csv(t, &dir.join(format!("{}.csv", t.name)))?;
    }
    Ok(())
}

/// C-style `%.{sig}g`.
pub fn format_g(x: f64, sig: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), sign, exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format_matches_c() {
        let cases = [
            (0.5, "0.5"),
            (1.0, "1"),
            (100.0, "100"),
            (1e-7, "1e-07"),
            (0.0001, "0.0001"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (1.0 / 3.0, "0.333333333333"),
            (-2.5e-5, "-2.5e-05"),
            (9.9999999999999e-5, "0.0001"),
            (f64::INFINITY, "inf"),
            (0.0, "0"),
            (1e100, "1e+100"),
        ];
        for (x, want) in cases {
            assert_eq!(format_g(x, 12), want, "{x}");
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new("profile", &["n", "weak"]);
        assert_eq!(t.to_csv(), "n,weak\n");
    }

    #[test]
    fn csv_quotes_and_line_endings() {
        let mut t = Table::new("x", &["n", "label"]);
        t.push(vec![Cell::Int(1), Cell::Text("a,b".into())]);
        t.push(vec![Cell::Int(2), Cell::Empty]);
        let s = t.to_csv();
        assert_eq!(s, "n,label\n1,\"a,b\"\n2,\n");
        assert!(!s.contains('\r'));
    }
}
