//! Result tables and their CSV / JSON / plot-data serializations.

use std::io::Write;
use std::path::Path;

use indexmap::IndexMap;
use serde_json::Value;
use thiserror::Error;

use super::config::OutputFormat;

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("row has {got} cells, table has {expected} columns")]
    Shape { expected: usize, got: usize },

    #[error("non-finite value {value} in column `{column}`")]
    NonFinite { column: String, value: f64 },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    /// 17 significant digits for reals, so values round-trip exactly.
    pub fn to_csv(&self) -> String {
        match self {
            Cell::Real(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Real(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Empty => Value::Null,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Cell::Real(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }
}

/// Rectangular table of finite values plus a metadata object.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
    pub metadata: IndexMap<String, Value>,
}

impl ResultTable {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
            metadata: IndexMap::new(),
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<(), EmitError> {
        if row.len() != self.columns.len() {
            return Err(EmitError::Shape {
                expected: self.columns.len(),
                got: row.len(),
            });
        }
        for (cell, column) in row.iter().zip(&self.columns) {
            if let Cell::Real(v) = cell {
                if !v.is_finite() {
                    return Err(EmitError::NonFinite {
                        column: column.clone(),
                        value: *v,
                    });
                }
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Result<usize, EmitError> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| EmitError::UnknownColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<Vec<&Cell>, EmitError> {
        let i = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| &r[i]).collect())
    }
}

pub fn write_csv<W: Write>(table: &ResultTable, writer: W) -> Result<(), EmitError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(table.columns())?;
    for row in table.rows() {
        w.write_record(row.iter().map(Cell::to_csv))?;
    }
    w.flush()?;
    Ok(())
}

/// `{"metadata": {...}, "records": [{column: value, ...}, ...]}`
pub fn write_json<W: Write>(table: &ResultTable, mut writer: W) -> Result<(), EmitError> {
    let records: Vec<Value> = table
        .rows()
        .iter()
        .map(|row| {
            let obj: serde_json::Map<String, Value> = table
                .columns()
                .iter()
                .cloned()
                .zip(row.iter().map(Cell::to_json))
                .collect();
            Value::Object(obj)
        })
        .collect();
    let doc = serde_json::json!({
        "metadata": table.metadata,
        "records": records,
    });
    serde_json::to_writer_pretty(&mut writer, &doc)?;
    writeln!(writer)?;
    writer.flush()?;
    Ok(())
}

/// Writes to `path`, or stdout when `None`.
pub fn emit(table: &ResultTable, format: OutputFormat, path: Option<&Path>) -> Result<(), EmitError> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    match format {
        OutputFormat::Csv => write_csv(table, sink),
        OutputFormat::Json => write_json(table, sink),
    }
}

/// One `x`/`y` column pair per curve, curves keyed by the distinct values of `group_by`.
/// Shorter curves are padded with empty cells.
pub fn plot_data(table: &ResultTable, x: &str, y: &str, group_by: &[&str]) -> Result<ResultTable, EmitError> {
    let xi = table.column_index(x)?;
    let yi = table.column_index(y)?;
    let gi: Vec<usize> = group_by.iter().map(|g| table.column_index(g)).collect::<Result<_, _>>()?;
    let mut curves: IndexMap<String, Vec<(Cell, Cell)>> = IndexMap::new();
    for row in table.rows() {
        let key = gi
            .iter()
            .zip(group_by)
            .map(|(&i, name)| format!("{name}={}", row[i].to_csv()))
            .collect::<Vec<_>>()
            .join(",");
        curves.entry(key).or_default().push((row[xi].clone(), row[yi].clone()));
    }
    let mut columns = Vec::new();
    for key in curves.keys() {
        let suffix = if key.is_empty() { String::new() } else { format!("[{key}]") };
        columns.push(format!("{x}{suffix}"));
        columns.push(format!("{y}{suffix}"));
    }
    let mut out = ResultTable::new(columns);
    out.metadata = table.metadata.clone();
    let len = curves.values().map(Vec::len).max().unwrap_or(0);
    for k in 0..len {
        let row = curves
            .values()
            .flat_map(|c| match c.get(k) {
                Some((a, b)) => [a.clone(), b.clone()],
                None => [Cell::Empty, Cell::Empty],
            })
            .collect();
        out.push(row)?;
    }
    Ok(out)
}
