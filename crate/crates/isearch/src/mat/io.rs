//! Matrix and label file I/O.
//!
//! Matrix CSV: one matrix row per line, comma-separated decimal values, no
//! header. Values are written with Rust's shortest round-trip formatting and
//! read with `f64` parsing, which accepts scientific notation. Label files
//! hold one `0`/`1` per line (1 marks an outlier).

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2, NdFloat};

use super::cast;
use crate::error::{Error, Result};

pub fn write_matrix_csv<F: NdFloat>(path: &Path, m: &ArrayView2<F>) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let mut line = String::new();
    for row in m.rows() {
        line.clear();
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            write!(line, "{v}").expect("write to string");
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv<F: NdFloat>(path: &Path) -> Result<Array2<F>> {
    let text = fs::read_to_string(path)?;
    let mut values: Vec<F> = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut count = 0usize;
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|e| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                reason: format!("bad number {field:?}: {e}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    reason: format!("non-finite value {v}"),
                });
            }
            values.push(cast(v));
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(c) if c != count => {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    reason: format!("row has {count} fields, expected {c}"),
                })
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Parse {
        path: path.display().to_string(),
        line: 0,
        reason: "empty matrix file".into(),
    })?;
    Ok(Array2::from_shape_vec((rows, cols), values).expect("consistent row lengths"))
}

/// `true` marks an outlier and serializes as `1`.
pub fn write_labels_csv(path: &Path, labels: &[bool]) -> Result<()> {
    let mut text = String::with_capacity(labels.len() * 2);
    for &l in labels {
        text.push(if l { '1' } else { '0' });
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn read_labels_csv(path: &Path) -> Result<Vec<bool>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        match t {
            "0" => out.push(false),
            "1" => out.push(true),
            other => {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    reason: format!("expected 0 or 1, got {other:?}"),
                })
            }
        }
    }
    Ok(out)
}
