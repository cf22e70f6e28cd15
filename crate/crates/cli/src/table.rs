//! Schema-versioned tables written as CSV or JSON.
//!
//! Floats are rounded to 9 significant digits before they are stored, so a
//! table read back from either format compares equal to the one written.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Float,
    UInt,
    Text,
    Bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    UInt(u64),
    Text(String),
    Bool(bool),
}

impl Cell {
    pub fn float(x: f64) -> Self {
        Cell::Float(round9(x))
    }

    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Float(x) => Some(*x),
            Cell::UInt(n) => Some(*n as f64),
            _ => None,
        }
    }

    pub fn as_u64(&self) -> Option<u64> {
        match self {
            Cell::UInt(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Cell::Bool(b) => Some(*b),
            _ => None,
        }
    }

    fn to_csv(&self) -> String {
        match self {
            Cell::Float(x) => fmt_float(*x),
            Cell::UInt(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Float(x) if x.is_finite() => json!(*x),
            Cell::Float(_) => Value::Null,
            Cell::UInt(n) => json!(*n),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(*b),
        }
    }
}

/// Rounds to 9 significant digits.
pub fn round9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

/// Shortest text that reads back as `round9(x)`.
pub fn fmt_float(x: f64) -> String {
    let r = round9(x);
    if r.is_nan() {
        "NaN".into()
    } else {
        format!("{r:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Column {
    pub name: &'static str,
    pub kind: Kind,
}

const fn col(name: &'static str, kind: Kind) -> Column {
    Column { name, kind }
}

#[derive(Debug, PartialEq, Eq)]
pub struct Schema {
    pub name: &'static str,
    pub version: u32,
    pub columns: &'static [Column],
}

impl Schema {
    pub fn id(&self) -> String {
        format!("cvqkd.{}/{}", self.name, self.version)
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }
}

use Kind::{Bool, Float, Text, UInt};

pub static WIGNER: Schema = Schema {
    name: "wigner",
    version: 1,
    columns: &[col("zr", Float), col("zi", Float), col("w", Float)],
};

pub static KEYRATE: Schema = Schema {
    name: "keyrate-sweep",
    version: 1,
    columns: &[
        col("family", Text),
        col("alpha", Float),
        col("beta_c", Float),
        col("beta_c_grid", Float),
        col("grid_resolution", Float),
        col("t_squared", Float),
        col("p0", Float),
        col("p1", Float),
        col("r_acc", Float),
        col("i_ab", Float),
        col("p_c", Float),
        col("tau", Float),
        col("s_ab", Float),
        col("s_ab_usable", Float),
    ],
};

pub static DISTANCE: Schema = Schema {
    name: "distance",
    version: 1,
    columns: &[
        col("distance_km", Float),
        col("t_squared", Float),
        col("s_ab_pascs", Float),
        col("s_ab_coherent", Float),
        col("alpha_pascs", Float),
        col("beta_c_pascs", Float),
        col("alpha_coherent", Float),
        col("beta_c_coherent", Float),
    ],
};

pub static INTERCEPT: Schema = Schema {
    name: "intercept",
    version: 1,
    columns: &[
        col("family", Text),
        col("beta_c", Float),
        col("status", Text),
        col("alpha_opt", Float),
        col("r_acc", Float),
        col("p_corr", Float),
        col("p_corr_wedge2x", Float),
        col("wedge2x_in_range", Bool),
        col("partition_sum", Float),
        col("ml_agreement", Float),
        col("audit", Text),
    ],
};

pub static SIMULATE: Schema = Schema {
    name: "simulate",
    version: 1,
    columns: &[
        col("family", Text),
        col("alpha", Float),
        col("beta_c", Float),
        col("t_squared", Float),
        col("seed", UInt),
        col("n_sent", UInt),
        col("n_sifted", UInt),
        col("n_accepted", UInt),
        col("n_errors", UInt),
        col("r_acc", Float),
        col("r_acc_se", Float),
        col("delta", Float),
        col("delta_se", Float),
        col("sift_fraction", Float),
        col("sift_se", Float),
    ],
};

pub static SCHEMAS: [&Schema; 5] = [&WIGNER, &KEYRATE, &DISTANCE, &INTERCEPT, &SIMULATE];

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
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: &'static Schema,
    /// Inputs that produced the table.
    pub meta: BTreeMap<String, String>,
    pub summary: BTreeMap<String, String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(schema: &'static Schema) -> Self {
        Self {
            schema,
            meta: BTreeMap::new(),
            summary: BTreeMap::new(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.schema.columns.len());
        self.rows.push(row);
    }

    pub fn get(&self, row: usize, column: &str) -> Option<&Cell> {
        self.rows.get(row)?.get(self.schema.column(column)?)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# schema={}", self.schema.id());
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# meta {k}={v}");
        }
        for (k, v) in &self.summary {
            let _ = writeln!(out, "# summary {k}={v}");
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
        w.write_record(self.schema.columns.iter().map(|c| c.name))
            .expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_csv)).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells"));
        out
    }

    pub fn to_json(&self) -> String {
        let doc = json!({
            "schema": self.schema.id(),
            "meta": self.meta,
            "summary": self.summary,
            "columns": self.schema.columns.iter().map(|c| c.name).collect::<Vec<_>>(),
            "rows": self.rows.iter().map(|r| r.iter().map(Cell::to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("json values serialize");
        s.push('\n');
        s
    }

    /// Parses either format, detected from the first character.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        if text.trim_start().starts_with('{') {
            Self::from_json(text)
        } else {
            Self::from_csv(text)
        }
    }

    pub fn from_csv(text: &str) -> Result<Self, CliError> {
        let bad = |m: String| CliError::Parse(m);
        let mut schema = None;
        let mut meta = BTreeMap::new();
        let mut summary = BTreeMap::new();
        let mut body = String::new();
        for line in text.lines() {
            let Some(comment) = line.strip_prefix("# ") else {
                body.push_str(line);
                body.push('\n');
                continue;
            };
            if let Some(id) = comment.strip_prefix("schema=") {
                schema = Some(lookup_schema(id)?);
            } else if let Some(kv) = comment.strip_prefix("meta ") {
                let (k, v) = split_kv(kv)?;
                meta.insert(k, v);
            } else if let Some(kv) = comment.strip_prefix("summary ") {
                let (k, v) = split_kv(kv)?;
                summary.insert(k, v);
            } else {
                return Err(bad(format!("unrecognized comment line `{line}`")));
            }
        }
        let schema = schema.ok_or_else(|| bad("missing schema line".into()))?;
        let mut reader = csv::ReaderBuilder::new().from_reader(body.as_bytes());
        let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
        check_header(schema, header.iter())?;
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let row = schema
                .columns
                .iter()
                .zip(rec.iter())
                .map(|(c, s)| parse_cell(c, s))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(Self {
            schema,
            meta,
            summary,
            rows,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let bad = |m: String| CliError::Parse(m);
        let doc: Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        let id = doc["schema"].as_str().ok_or_else(|| bad("missing schema".into()))?;
        let schema = lookup_schema(id)?;
        let strings = |v: &Value, what: &str| -> Result<BTreeMap<String, String>, CliError> {
            let obj = v.as_object().ok_or_else(|| bad(format!("`{what}` is not an object")))?;
            obj.iter()
                .map(|(k, v)| {
                    v.as_str()
                        .map(|s| (k.clone(), s.to_string()))
                        .ok_or_else(|| bad(format!("`{what}.{k}` is not a string")))
                })
                .collect()
        };
        let meta = strings(&doc["meta"], "meta")?;
        let summary = strings(&doc["summary"], "summary")?;
        let columns = doc["columns"].as_array().ok_or_else(|| bad("missing columns".into()))?;
        check_header(schema, columns.iter().map(|c| c.as_str().unwrap_or("")))?;
        let mut rows = Vec::new();
        for r in doc["rows"].as_array().ok_or_else(|| bad("missing rows".into()))? {
            let r = r.as_array().ok_or_else(|| bad("row is not an array".into()))?;
            if r.len() != schema.columns.len() {
                return Err(bad(format!("row has {} cells, expected {}", r.len(), schema.columns.len())));
            }
            let row = schema
                .columns
                .iter()
                .zip(r)
                .map(|(c, v)| json_cell(c, v))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(Self {
            schema,
            meta,
            summary,
            rows,
        })
    }
}

fn lookup_schema(id: &str) -> Result<&'static Schema, CliError> {
    SCHEMAS
        .iter()
        .copied()
        .find(|s| s.id() == id)
        .ok_or_else(|| CliError::Parse(format!("unknown schema `{id}`")))
}

fn split_kv(kv: &str) -> Result<(String, String), CliError> {
    kv.split_once('=')
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .ok_or_else(|| CliError::Parse(format!("expected key=value, got `{kv}`")))
}

fn check_header<'a>(schema: &Schema, names: impl Iterator<Item = &'a str>) -> Result<(), CliError> {
    let got: Vec<&str> = names.collect();
    let want: Vec<&str> = schema.columns.iter().map(|c| c.name).collect();
    if got != want {
        return Err(CliError::Parse(format!(
            "columns {got:?} do not match {} {want:?}",
            schema.id()
        )));
    }
    Ok(())
}

fn parse_cell(c: &Column, s: &str) -> Result<Cell, CliError> {
    let bad = || CliError::Parse(format!("bad value `{s}` in column `{}`", c.name));
    Ok(match c.kind {
        Kind::Float => Cell::Float(s.parse().map_err(|_| bad())?),
        Kind::UInt => Cell::UInt(s.parse().map_err(|_| bad())?),
        Kind::Text => Cell::Text(s.to_string()),
        Kind::Bool => Cell::Bool(s.parse().map_err(|_| bad())?),
    })
}

fn json_cell(c: &Column, v: &Value) -> Result<Cell, CliError> {
    let bad = || CliError::Parse(format!("bad value `{v}` in column `{}`", c.name));
    Ok(match c.kind {
        Kind::Float if v.is_null() => Cell::Float(f64::NAN),
        Kind::Float => Cell::Float(v.as_f64().ok_or_else(bad)?),
        Kind::UInt => Cell::UInt(v.as_u64().ok_or_else(bad)?),
        Kind::Text => Cell::Text(v.as_str().ok_or_else(bad)?.to_string()),
        Kind::Bool => Cell::Bool(v.as_bool().ok_or_else(bad)?),
    })
}
