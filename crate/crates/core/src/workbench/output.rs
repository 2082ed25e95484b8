//! Result tables, pass/fail checks and their CSV/JSON encodings.

use std::fmt;

use serde_json::{Map, Value};

use super::config::{CliError, ExperimentConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            // Debug formatting is the shortest representation that parses back exactly
            Cell::Float(v) => write!(f, "{v:?}"),
            Cell::Text(s) => write!(f, "{s}"),
        }
    }
}

impl Cell {
    /// Inverse of `Display`: integers first, then floats, then text.
    pub fn parse(field: &str) -> Cell {
        if let Ok(v) = field.parse::<i64>() {
            Cell::Int(v)
        } else if let Ok(v) = field.parse::<f64>() {
            Cell::Float(v)
        } else {
            Cell::Text(field.to_string())
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Float(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.clone()),
        }
    }

    fn from_json(v: &Value) -> Option<Cell> {
        match v {
            Value::Number(n) if n.is_i64() => n.as_i64().map(Cell::Int),
            Value::Number(n) => n.as_f64().map(Cell::Float),
            Value::String(s) => Some(Cell::Text(s.clone())),
            _ => None,
        }
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }
}

/// Comparison applied by a [`Check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// `value <= threshold`
    AtMost,
    /// `value >= threshold`
    AtLeast,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, relation: Relation::AtMost, threshold, pass: value <= threshold }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, relation: Relation::AtLeast, threshold, pass: value >= threshold }
    }

    /// A boolean property, encoded as `value = 1` for true.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{} {}: {:e} {} {:e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.relation.symbol(),
            self.threshold
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultDoc {
    pub config: ExperimentConfig,
    pub table: ResultTable,
    pub checks: Vec<Check>,
}

impl ResultDoc {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub fn emit_csv(table: &ResultTable) -> String {
    let mut out = table.columns.join(",");
    out.push('\n');
    for row in &table.rows {
        let fields: Vec<String> = row.iter().map(Cell::to_string).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_csv(text: &str) -> Result<ResultTable, CliError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CliError::Validation("empty csv".into()))?;
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<Cell> = line.split(',').map(Cell::parse).collect();
        if row.len() != columns.len() {
            return Err(CliError::Validation(format!("csv row {} has {} fields, expected {}", i + 1, row.len(), columns.len())));
        }
        rows.push(row);
    }
    Ok(ResultTable { columns, rows })
}

fn check_to_json(c: &Check) -> Value {
    let mut m = Map::new();
    m.insert("name".into(), Value::from(c.name.clone()));
    m.insert("value".into(), Value::from(c.value));
    m.insert("relation".into(), Value::from(c.relation.symbol()));
    m.insert("threshold".into(), Value::from(c.threshold));
    m.insert("pass".into(), Value::from(c.pass));
    Value::Object(m)
}

fn check_from_json(v: &Value) -> Option<Check> {
    let relation = match v.get("relation")?.as_str()? {
        "<=" => Relation::AtMost,
        ">=" => Relation::AtLeast,
        _ => return None,
    };
    Some(Check {
        name: v.get("name")?.as_str()?.to_string(),
        value: v.get("value")?.as_f64()?,
        relation,
        threshold: v.get("threshold")?.as_f64()?,
        pass: v.get("pass")?.as_bool()?,
    })
}

/// `{config, rows, checks}` with rows as objects keyed by column, in column order.
pub fn emit_json(doc: &ResultDoc) -> String {
    let rows: Vec<Value> = doc
        .table
        .rows
        .iter()
        .map(|row| {
            Value::Object(doc.table.columns.iter().cloned().zip(row.iter().map(Cell::to_json)).collect())
        })
        .collect();
    let mut top = Map::new();
    top.insert("config".into(), serde_json::to_value(&doc.config).expect("config is serializable"));
    top.insert("rows".into(), Value::Array(rows));
    top.insert("checks".into(), Value::Array(doc.checks.iter().map(check_to_json).collect()));
    let mut text = serde_json::to_string_pretty(&Value::Object(top)).expect("json values serialize");
    text.push('\n');
    text
}

/// Inverse of [`emit_json`]. Column names come from the first row.
pub fn parse_json(text: &str) -> Result<ResultDoc, CliError> {
    let bad = |what: &str| CliError::Validation(format!("malformed result json: {what}"));
    let top: Value = serde_json::from_str(text).map_err(|e| CliError::Validation(e.to_string()))?;
    let config: ExperimentConfig =
        serde_json::from_value(top.get("config").cloned().ok_or_else(|| bad("config"))?)
            .map_err(|e| CliError::Validation(e.to_string()))?;
    let rows = top.get("rows").and_then(Value::as_array).ok_or_else(|| bad("rows"))?;
    let mut table = ResultTable::default();
    for row in rows {
        let obj = row.as_object().ok_or_else(|| bad("row"))?;
        if table.columns.is_empty() {
            table.columns = obj.keys().cloned().collect();
        }
        let cells = obj.values().map(Cell::from_json).collect::<Option<Vec<_>>>().ok_or_else(|| bad("cell"))?;
        if cells.len() != table.columns.len() {
            return Err(bad("row width"));
        }
        table.rows.push(cells);
    }
    let checks = top
        .get("checks")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("checks"))?
        .iter()
        .map(check_from_json)
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| bad("check"))?;
    Ok(ResultDoc { config, table, checks })
}
