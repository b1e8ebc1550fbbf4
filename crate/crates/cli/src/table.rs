use std::fmt::Write as _;

use serde_json::{Number, Value};

/// One table cell. Ratios print as percentages with one decimal in TSV and
/// stay raw in JSON.
#[derive(Debug, Clone)]
pub enum Cell {
    Text(String),
    Count(usize),
    Ratio(Option<f64>),
    Value(Option<f64>),
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    fn tsv(&self) -> String {
        match self {
            Cell::Text(s) => s.replace(['\t', '\n', '\r'], " "),
            Cell::Count(n) => n.to_string(),
            Cell::Ratio(Some(v)) => fixed(v * 100.0, 1),
            Cell::Value(Some(v)) => fixed(*v, 4),
            Cell::Ratio(None) | Cell::Value(None) => "NA".into(),
        }
    }
}

/// Fixed-point rendering without a `-0.0`.
fn fixed(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

pub fn round4(v: f64) -> f64 {
    let r = (v * 1e4).round() / 1e4;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn number(v: f64) -> Value {
    Number::from_f64(round4(v)).map_or(Value::Null, Value::Number)
}

/// Rounds every non-integer number in a JSON tree to four decimals.
pub fn round_floats(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => *value = number(n.as_f64().unwrap_or(f64::NAN)),
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_tsv(&self) -> String {
        let mut out = self.columns.join("\t");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::tsv).collect();
            let _ = writeln!(out, "{}", cells.join("\t"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Tsv,
}

/// What a command produces: one or more tables (TSV sections separated by a
/// blank line) and a structured document for JSON output.
#[derive(Debug)]
pub struct Report {
    pub tables: Vec<Table>,
    pub json: Value,
    /// Some metric was undefined on valid input; outputs are still written.
    pub metric_failure: bool,
}

impl Report {
    pub fn new(tables: Vec<Table>, json: Value) -> Self {
        Report {
            tables,
            json,
            metric_failure: false,
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Tsv => self.tables.iter().map(Table::to_tsv).collect::<Vec<_>>().join("\n"),
            Format::Json => {
                let mut json = self.json.clone();
                round_floats(&mut json);
                let mut s = serde_json::to_string_pretty(&json).expect("json values serialize");
                s.push('\n');
                s
            }
        }
    }
}
