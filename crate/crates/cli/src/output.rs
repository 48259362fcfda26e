//! Emission of results as CSV, JSON or plain text, with a provenance header.

use crate::config::RunConfig;
use gelshoot::io::fmt17;
use gelshoot::{Error, Result};
use serde_json::{json, Value};

/// A cell of a CSV table.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt17(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(x) => json!(x.to_string()),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => serde_json::from_str(s).unwrap_or_else(|_| json!(s)),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn numeric(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Self {
        let mut t = Self::new(header);
        t.rows = rows.into_iter().map(|r| r.into_iter().map(Cell::Num).collect()).collect();
        t
    }
}

/// What a subcommand produced.
#[derive(Debug, Clone)]
pub enum Output {
    /// Structured result; JSON by default.
    Json(Value),
    /// Table; CSV by default.
    Table(Table),
    /// Structured summary with a table behind it: JSON shows the summary,
    /// CSV shows the table.
    Both(Value, Table),
    /// A bare value line.
    Text(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

pub fn parse_format(s: Option<&str>) -> Result<Option<Format>> {
    match s {
        None => Ok(None),
        Some("csv") => Ok(Some(Format::Csv)),
        Some("json") => Ok(Some(Format::Json)),
        Some(o) => Err(Error::domain(format!("unknown format '{o}', expected csv or json"))),
    }
}

pub struct Provenance<'a> {
    pub command: &'a str,
    pub config: &'a RunConfig,
}

impl Provenance<'_> {
    fn csv_header(&self) -> String {
        format!(
            "# gelshoot {} command={}\n# config: {}\n",
            gelshoot_version(),
            self.command,
            self.config.echo()
        )
    }

    fn json(&self) -> Value {
        json!({"version": gelshoot_version(), "command": self.command, "config": self.config.to_json()})
    }
}

pub fn gelshoot_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

fn csv_body(t: &Table) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::NoConvergence(format!("csv: {e}"));
    w.write_record(&t.header).map_err(io)?;
    for r in &t.rows {
        w.write_record(r.iter().map(Cell::render)).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::NoConvergence(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

fn table_json(t: &Table) -> Value {
    Value::Array(
        t.rows
            .iter()
            .map(|r| Value::Object(t.header.iter().cloned().zip(r.iter().map(Cell::to_json)).collect()))
            .collect(),
    )
}

fn with_provenance(v: Value, prov: &Provenance) -> Value {
    match v {
        Value::Object(mut m) => {
            m.insert("provenance".into(), prov.json());
            Value::Object(m)
        }
        other => json!({"result": other, "provenance": prov.json()}),
    }
}

/// One-row table of the scalar fields of a JSON object.
fn flat_table(v: &Value) -> Result<Table> {
    let Value::Object(m) = v else {
        return Err(Error::domain("result has no CSV form; use --format json"));
    };
    let mut t = Table::new(&[]);
    let mut row = Vec::new();
    for (k, x) in m {
        t.header.push(k.clone());
        row.push(match x {
            Value::Number(n) => Cell::Num(n.as_f64().unwrap_or(f64::NAN)),
            Value::String(s) => Cell::Text(s.clone()),
            Value::Bool(b) => Cell::Text(b.to_string()),
            other => Cell::Text(other.to_string()),
        });
    }
    t.rows.push(row);
    Ok(t)
}

/// Render an output in the requested format.
pub fn render(out: &Output, fmt: Option<Format>, prov: &Provenance) -> Result<String> {
    let json_text = |v: Value| serde_json::to_string_pretty(&with_provenance(v, prov)).expect("json") + "\n";
    let csv_text = |t: &Table| -> Result<String> { Ok(prov.csv_header() + &csv_body(t)?) };
    match (out, fmt) {
        (Output::Json(v), None | Some(Format::Json)) => Ok(json_text(v.clone())),
        (Output::Json(v), Some(Format::Csv)) => csv_text(&flat_table(v)?),
        (Output::Table(t), None | Some(Format::Csv)) => csv_text(t),
        (Output::Table(t), Some(Format::Json)) => Ok(json_text(json!({ "rows": table_json(t) }))),
        (Output::Both(v, _), None | Some(Format::Json)) => Ok(json_text(v.clone())),
        (Output::Both(_, t), Some(Format::Csv)) => csv_text(t),
        (Output::Text(s), None) => Ok(format!("{s}\n")),
        (Output::Text(s), Some(Format::Json)) => Ok(json_text(json!({ "value": s }))),
        (Output::Text(s), Some(Format::Csv)) => csv_text(&Table { header: vec!["value".into()], rows: vec![vec![Cell::Text(s.clone())]] }),
    }
}
