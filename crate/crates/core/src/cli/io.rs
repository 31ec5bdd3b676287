//! CSV input parsing and report formatting for the command line.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::linalg::SymmetricMatrix;
use crate::robust::DataMatrix;

/// Parsed input table; `columns` holds the header names when the first row was non-numeric.
#[derive(Debug)]
pub struct InputTable {
    pub columns: Option<Vec<String>>,
    pub data: DataMatrix,
}

impl InputTable {
    pub fn column_label(&self, index: usize) -> String {
        match &self.columns {
            Some(names) if index < names.len() => format!("{} ('{}')", index + 1, names[index]),
            _ => format!("{}", index + 1),
        }
    }
}

fn parse_field(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads comma-separated observations, one per row. A first row containing
/// any non-numeric field is taken as the header.
pub fn read_table<R: std::io::Read>(reader: R) -> Result<InputTable, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut columns = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (k, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(format!("malformed CSV: {e}")))?;
        let line = record.position().map(|p| p.line()).unwrap_or(k as u64 + 1);
        let parsed: Vec<Option<f64>> = record.iter().map(parse_field).collect();
        if k == 0 && parsed.iter().any(Option::is_none) {
            columns = Some(record.iter().map(str::to_string).collect::<Vec<_>>());
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(CliError::Input(format!(
                "line {line}: expected {expected} fields, found {}",
                record.len()
            )));
        }
        let mut row = Vec::with_capacity(expected);
        for (field, (raw, value)) in record.iter().zip(parsed).enumerate() {
            match value {
                Some(v) => row.push(v),
                None => {
                    return Err(CliError::Input(format!(
                        "line {line}, field {}: cannot parse '{raw}' as a finite number",
                        field + 1
                    )))
                }
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Input("input contains no observations".into()));
    }
    let data = DataMatrix::from_rows(&rows).map_err(|e| CliError::Input(e.to_string()))?;
    Ok(InputTable { columns, data })
}

pub fn read_table_file(path: &Path) -> Result<InputTable, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
    read_table(file)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiReport {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

/// Output of `estimate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub method: String,
    pub p: usize,
    pub n: usize,
    pub correlation: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shape: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambdas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ci: Option<CiReport>,
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn write_matrix_rows<W: Write + ?Sized>(out: &mut W, name: &str, m: &[Vec<f64>]) -> std::io::Result<()> {
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            writeln!(out, "{name},{},{},{}", i + 1, j + 1, fmt_f64(*v))?;
        }
    }
    Ok(())
}

impl EstimateReport {
    pub fn correlation_matrix(&self) -> SymmetricMatrix {
        SymmetricMatrix::from_rows(&self.correlation).expect("square correlation matrix")
    }

    /// Long-format CSV: `quantity,row,col,value` with 1-based indices.
    pub fn write_csv<W: Write + ?Sized>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "quantity,row,col,value")?;
        write_matrix_rows(out, "correlation", &self.correlation)?;
        if let Some(shape) = &self.shape {
            write_matrix_rows(out, "shape", shape)?;
        }
        if let Some(lambdas) = &self.lambdas {
            for (i, v) in lambdas.iter().enumerate() {
                writeln!(out, "lambda,{},,{}", i + 1, fmt_f64(*v))?;
            }
        }
        if let Some(ci) = &self.ci {
            writeln!(out, "ci_lower,1,2,{}", fmt_f64(ci.lower))?;
            writeln!(out, "ci_upper,1,2,{}", fmt_f64(ci.upper))?;
            writeln!(out, "ci_level,,,{}", fmt_f64(ci.level))?;
        }
        Ok(())
    }

    pub fn write_json<W: Write + ?Sized>(&self, out: &mut W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut *out, self)?;
        writeln!(out)
    }
}
