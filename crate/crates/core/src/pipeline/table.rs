//! Plain-text numeric tables: one row per line, fields separated by commas
//! or by whitespace, no header. Blank lines are ignored.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{DistanceMatrix, Embedding};

pub fn parse_table(text: &str, path: &Path) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = if line.contains(',') {
            line.split(',').map(str::trim).collect()
        } else {
            line.split_whitespace().collect()
        };
        if let Some(first) = rows.first() {
            if fields.len() != first.len() {
                return Err(Error::InconsistentWidth {
                    path: path.to_path_buf(),
                    line: line_no,
                    expected: first.len(),
                    found: fields.len(),
                });
            }
        }
        let row = fields
            .iter()
            .map(|f| {
                let v: f64 = f.parse().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    field: f.to_string(),
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFiniteValue {
                        path: path.to_path_buf(),
                        line: line_no,
                        field: f.to_string(),
                    })
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn read_table(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_table(&text, path)
}

/// Reads a point configuration: rows are points, columns coordinates.
pub fn load_embedding_file(path: &Path) -> Result<Embedding> {
    Embedding::new(read_table(path)?)
}

/// Reads a full square dissimilarity matrix.
pub fn load_matrix_file(path: &Path) -> Result<DistanceMatrix> {
    DistanceMatrix::new(read_table(path)?)
}

/// Seventeen significant digits, enough to recover every `f64` exactly.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn format_table(m: &DMatrix<f64>) -> String {
    let mut out = String::with_capacity(m.nrows() * m.ncols() * 24);
    for row in m.row_iter() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{}", format_float(*v)).expect("write to string");
        }
        out.push('\n');
    }
    out
}

pub fn write_table(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    fs::write(path, format_table(m)).map_err(|e| Error::io(path, e))
}
