//! Report rows and their CSV and JSON forms.

use std::path::Path;

use dyadica::DyadicInterval;
use serde_json::{json, Map, Value};

use crate::config::Suite;
use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(u64),
    Flag(bool),
    Text(&'static str),
    Interval(DyadicInterval),
}

impl Cell {
    /// Reals print in their shortest round-trip form, intervals as
    /// `level:position`.
    pub fn render(&self) -> String {
        match self {
            Cell::Real(x) => format!("{x:?}"),
            Cell::Int(n) => n.to_string(),
            Cell::Flag(b) => b.to_string(),
            Cell::Text(s) => (*s).to_owned(),
            Cell::Interval(i) => format!("{}:{}", i.level, i.position),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Real(x) if x.is_finite() => json!(x),
            Cell::Real(x) => json!(x.to_string()),
            Cell::Int(n) => json!(n),
            Cell::Flag(b) => json!(b),
            Cell::Text(s) => json!(s),
            Cell::Interval(i) => json!([i.level, i.position]),
        }
    }
}

/// One line of a report: the instance id and seed followed by named cells.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub id: usize,
    pub seed: u64,
    pub cells: Vec<(&'static str, Cell)>,
    /// Failed checks, one message each.
    pub failures: Vec<String>,
}

impl ReportRow {
    pub fn new(id: usize, seed: u64) -> Self {
        Self {
            id,
            seed,
            cells: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn push(&mut self, name: &'static str, cell: Cell) -> &mut Self {
        self.cells.push((name, cell));
        self
    }

    pub fn real(&mut self, name: &'static str, x: f64) -> &mut Self {
        self.push(name, Cell::Real(x))
    }

    pub fn get(&self, name: &str) -> Option<&Cell> {
        self.cells.iter().find(|(n, _)| *n == name).map(|(_, c)| c)
    }

    pub fn check(&mut self, ok: bool, message: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(message());
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub suite: Suite,
    pub rows: Vec<ReportRow>,
    /// Failed checks that span rows.
    pub failures: Vec<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.rows.iter().all(|r| r.failures.is_empty())
    }

    /// Every failure message, prefixed by its row id where there is one.
    pub fn all_failures(&self) -> Vec<String> {
        self.rows
            .iter()
            .flat_map(|r| r.failures.iter().map(move |f| format!("row {}: {f}", r.id)))
            .chain(self.failures.iter().cloned())
            .collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        if let Some(first) = self.rows.first() {
            let mut header = vec!["id", "seed"];
            header.extend(first.cells.iter().map(|(n, _)| *n));
            header.push("passed");
            writer.write_record(&header)?;
        }
        for row in &self.rows {
            let mut record = vec![row.id.to_string(), row.seed.to_string()];
            record.extend(row.cells.iter().map(|(_, c)| c.render()));
            record.push(row.failures.is_empty().to_string());
            writer.write_record(&record)?;
        }
        let bytes = writer.into_inner().map_err(|e| CliError::Report(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Report(e.to_string()))
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut object = Map::new();
                object.insert("id".into(), json!(row.id));
                object.insert("seed".into(), json!(row.seed));
                for (name, cell) in &row.cells {
                    object.insert((*name).into(), cell.to_json());
                }
                object.insert("failures".into(), json!(row.failures));
                Value::Object(object)
            })
            .collect();
        json!({
            "suite": self.suite.as_str(),
            "passed": self.passed(),
            "failures": self.failures,
            "rows": rows,
        })
    }

    pub fn write(&self, csv_path: &Path, json_path: Option<&Path>) -> Result<()> {
        std::fs::write(csv_path, self.to_csv()?).map_err(|e| CliError::io(csv_path, e))?;
        if let Some(path) = json_path {
            let text = serde_json::to_string_pretty(&self.to_json()).expect("report JSON is always serializable");
            std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))?;
        }
        Ok(())
    }
}

/// A report row read back from CSV, as header/value pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct StoredRow {
    pub fields: Vec<(String, String)>,
}

impl StoredRow {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_str())
    }

    pub fn real(&self, name: &str) -> Option<f64> {
        self.get(name).and_then(|v| v.parse().ok())
    }
}

pub fn read_row(path: &Path, id: usize) -> Result<StoredRow> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header.first().map(String::as_str) != Some("id") {
        return Err(CliError::Report("first column must be `id`".into()));
    }
    for record in reader.records() {
        let record = record?;
        let row_id: usize = record[0]
            .parse()
            .map_err(|_| CliError::Report(format!("bad id `{}`", &record[0])))?;
        if row_id == id {
            let fields = header.iter().cloned().zip(record.iter().map(str::to_owned)).collect();
            return Ok(StoredRow { fields });
        }
    }
    Err(CliError::MissingRow(id))
}
