//! Tabular export with provenance.
//!
//! Every table carries the fully resolved configuration that produced it:
//! as `# config: {...}` comment lines ahead of the CSV header, or as a
//! `config` field next to `data` in JSON. Extended-precision values are
//! written as decimal strings so that no digits are lost.

use std::io::{self, Write};

use serde_json::{json, Map, Value};

use crate::cumulants::CumulantReport;
use crate::exact::MagnetizationDistribution;
use crate::xprec::to_decimal;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

/// Column-oriented table of JSON scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: &mut W, config: &Value) -> io::Result<()> {
        writeln!(out, "# config: {}", serde_json::to_string(config)?)?;
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(csv_cell).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_json(&self, config: &Value) -> Value {
        let data: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for (c, v) in self.columns.iter().zip(row) {
                    obj.insert(c.clone(), v.clone());
                }
                Value::Object(obj)
            })
            .collect();
        json!({ "config": config, "data": data })
    }

    pub fn write_json<W: Write>(&self, out: &mut W, config: &Value) -> io::Result<()> {
        serde_json::to_writer_pretty(&mut *out, &self.to_json(config))?;
        writeln!(out)
    }

    pub fn write<W: Write>(&self, out: &mut W, config: &Value, format: Format) -> io::Result<()> {
        match format {
            Format::Csv => self.write_csv(out, config),
            Format::Json => self.write_json(out, config),
        }
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) if s.contains([',', '"', '\n']) => {
            format!("\"{}\"", s.replace('"', "\"\""))
        }
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Finite floats as numbers, anything else as `null`.
pub fn number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

/// Columns `k, M, log_weight, pmf`; `log_weight` in full working precision.
pub fn pmf_table(dist: &MagnetizationDistribution) -> Table {
    let digits = dist.precision().digits();
    let mut t = Table::new(&["k", "M", "log_weight", "pmf"]);
    for (k, m, lw, p) in dist.rows() {
        t.push(vec![
            json!(k),
            json!(m),
            Value::String(to_decimal(lw, digits)),
            number(p),
        ]);
    }
    t
}

/// Columns `j, kappa_raw, kappa_std, bound, margin, method`.
pub fn cumulant_table(reports: &[CumulantReport]) -> Table {
    let mut t = Table::new(&["j", "kappa_raw", "kappa_std", "bound", "margin", "method"]);
    for r in reports {
        t.push(vec![
            json!(r.j),
            number(r.kappa_raw),
            number(r.kappa_std),
            r.bound.map_or(Value::Null, number),
            r.margin.map_or(Value::Null, number),
            json!(r.method.as_str()),
        ]);
    }
    t
}

/// One metric value in a long-format table.
#[derive(Debug, Clone, PartialEq)]
pub struct LongRow {
    pub n: usize,
    pub p: f64,
    pub metric: String,
    pub value: f64,
}

/// Columns `N, p, metric, value`, sorted by `(N, p, metric)`.
pub fn long_table(rows: &[LongRow]) -> Table {
    let mut sorted: Vec<&LongRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        (a.n, a.metric.as_str())
            .cmp(&(b.n, b.metric.as_str()))
            .then(a.p.total_cmp(&b.p))
    });
    let mut t = Table::new(&["N", "p", "metric", "value"]);
    for r in sorted {
        t.push(vec![
            json!(r.n),
            number(r.p),
            json!(r.metric),
            number(r.value),
        ]);
    }
    t
}
