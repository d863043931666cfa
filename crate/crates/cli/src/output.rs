//! Artifacts (CSV/JSON/binary) and run manifests.

use std::fmt::Display;
use std::io::Write;
use std::str::FromStr;

use serde_json::{json, Map, Value};
use winmart::wf::io::{fmt_f64, write_binary, write_csv};
use winmart::wf::PathEnsemble;
use winmart::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Bin,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Bin => "bin",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "bin" => Ok(Format::Bin),
            other => Err(Error::Usage(format!(
                "unknown format '{other}' (csv, json, bin)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Real(v) => fmt_f64(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => {
                format!("\"{}\"", s.replace('"', "\"\""))
            }
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            // Non-finite reals become null.
            Cell::Real(v) => Value::from(*v),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        Cell::Real(v.unwrap_or(f64::NAN))
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
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

/// Rows with a fixed header. CSV and JSON carry the same fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width must match the header"
        );
        self.rows.push(row);
    }

    pub fn write_csv(&self, w: &mut dyn Write) -> Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.to_string(), v.json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

pub enum Artifact {
    Table(Table),
    Ensemble(Box<PathEnsemble>),
    /// Structured report; CSV output falls back to the table.
    Report {
        json: Value,
        table: Table,
    },
}

fn write_json(v: &Value, w: &mut dyn Write) -> Result<()> {
    let s = serde_json::to_string_pretty(v).map_err(|e| Error::Format(e.to_string()))?;
    writeln!(w, "{s}")?;
    Ok(())
}

impl Artifact {
    pub fn supports(&self, format: Format) -> bool {
        format != Format::Bin || matches!(self, Artifact::Ensemble(_))
    }

    pub fn write(&self, format: Format, w: &mut dyn Write) -> Result<()> {
        match (self, format) {
            (Artifact::Table(t), Format::Csv)
            | (Artifact::Report { table: t, .. }, Format::Csv) => t.write_csv(w),
            (Artifact::Table(t), Format::Json) => write_json(&t.to_json(), w),
            (Artifact::Report { json, .. }, Format::Json) => write_json(json, w),
            (Artifact::Ensemble(e), Format::Csv) => write_csv(e, w),
            (Artifact::Ensemble(e), Format::Json) => write_json(
                &serde_json::to_value(e).map_err(|e| Error::Format(e.to_string()))?,
                w,
            ),
            (Artifact::Ensemble(e), Format::Bin) => write_binary(e, w),
            (_, Format::Bin) => Err(Error::Usage(
                "binary output is only available for simulate".into(),
            )),
        }
    }
}

/// What a command hands back: summary lines for stdout and the artifact.
pub struct Outcome {
    pub summary: Vec<String>,
    pub artifact: Artifact,
}

impl Outcome {
    pub fn new(artifact: Artifact) -> Self {
        Self {
            summary: Vec::new(),
            artifact,
        }
    }

    pub fn table(t: Table) -> Self {
        Self::new(Artifact::Table(t))
    }

    pub fn line(mut self, key: &str, value: impl Display) -> Self {
        self.summary.push(format!("{key} = {value}"));
        self
    }
}

pub struct ManifestInfo<'a> {
    pub command: &'a str,
    pub params: &'a std::collections::BTreeMap<&'static str, String>,
    pub format: Format,
    pub output: &'a str,
    pub threads: Option<usize>,
    pub wall_time_s: f64,
}

pub fn manifest(info: &ManifestInfo<'_>) -> Value {
    let seed = info.params.get("seed").and_then(|s| s.parse::<u64>().ok());
    json!({
        "command": info.command,
        "params": info.params,
        "seed": seed,
        "format": info.format.name(),
        "output": info.output,
        "threads": info.threads,
        "tool": "winmart",
        "version": env!("CARGO_PKG_VERSION"),
        "wall_time_s": info.wall_time_s,
    })
}

pub fn write_manifest(path: &std::path::Path, info: &ManifestInfo<'_>) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    write_json(&manifest(info), &mut f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_carry_the_same_fields() {
        let mut t = Table::new(&["x", "n", "name", "ok"]);
        t.push(vec![0.1.into(), 3usize.into(), "a,b".into(), true.into()]);
        t.push(vec![
            f64::NAN.into(),
            0usize.into(),
            "c".into(),
            false.into(),
        ]);
        let mut csv = Vec::new();
        t.write_csv(&mut csv).unwrap();
        assert_eq!(
            String::from_utf8(csv).unwrap(),
            "x,n,name,ok\n1.0000000000000001e-1,3,\"a,b\",true\nNaN,0,c,false\n"
        );
        let j = t.to_json();
        assert_eq!(j[0]["x"], 0.1);
        assert!(j[1]["x"].is_null());
        assert_eq!(j[0]["name"], "a,b");
    }

    #[test]
    fn binary_only_for_ensembles() {
        let a = Artifact::Table(Table::new(&["x"]));
        assert!(!a.supports(Format::Bin));
        assert!(a.supports(Format::Json));
        assert!("xml".parse::<Format>().is_err());
    }
}
