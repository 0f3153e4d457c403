//! Dataset CSV: the eight input columns in canonical order plus the
//! `fz_total_N` target column. Measurement-campaign run files use the same
//! schema, so any run file doubles as a training dataset.

use std::fs;
use std::path::Path;

use super::ParseError;
use crate::gp::Dataset;
use crate::input::{InputVector, INPUT_COLUMNS, INPUT_DIM};

pub const TARGET_COLUMN: &str = "fz_total_N";

fn header() -> String {
    let mut h = INPUT_COLUMNS.join(",");
    h.push(',');
    h.push_str(TARGET_COLUMN);
    h
}

/// Render a dataset as CSV text. Floats use the shortest round-trip
/// representation, so write/parse is lossless.
pub fn dataset_to_csv(data: &Dataset) -> String {
    let mut out = header();
    out.push('\n');
    for (w, y) in data.inputs().iter().zip(data.targets()) {
        let mut fields: Vec<String> = w.0.iter().map(|v| v.to_string()).collect();
        fields.push(y.to_string());
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Parse dataset CSV text; errors carry 1-based line numbers.
pub fn parse_dataset_csv(text: &str) -> Result<Dataset, ParseError> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| ParseError::structure("empty file"))?;
    if first.trim() != header() {
        return Err(ParseError::at(
            1,
            format!("bad header: expected `{}`", header()),
        ));
    }
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != INPUT_DIM + 1 {
            return Err(ParseError::at(
                line_no,
                format!("expected {} fields, got {}", INPUT_DIM + 1, fields.len()),
            ));
        }
        let mut coords = [0.0; INPUT_DIM];
        for (i, f) in fields.iter().take(INPUT_DIM).enumerate() {
            coords[i] = parse_float(f, line_no, INPUT_COLUMNS[i])?;
        }
        let y = parse_float(fields[INPUT_DIM], line_no, TARGET_COLUMN)?;
        inputs.push(InputVector::new(coords));
        targets.push(y);
    }
    Dataset::new(inputs, targets).map_err(|e| ParseError::structure(e.to_string()))
}

fn parse_float(field: &str, line: usize, column: &str) -> Result<f64, ParseError> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| ParseError::at(line, format!("column {column}: `{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(ParseError::at(
            line,
            format!("column {column}: value must be finite"),
        ));
    }
    Ok(v)
}

pub fn write_dataset(path: &Path, data: &Dataset) -> std::io::Result<()> {
    fs::write(path, dataset_to_csv(data))
}

pub fn read_dataset(path: &Path) -> Result<Dataset, DatasetFileError> {
    let text = fs::read_to_string(path).map_err(|e| DatasetFileError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_dataset_csv(&text).map_err(|e| DatasetFileError::Parse {
        path: path.display().to_string(),
        source: e,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
}
