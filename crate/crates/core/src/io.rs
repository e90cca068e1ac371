//! Plain CSV matrices: one row per line, comma separated, no header.
//! Values are written with 17 significant digits so they read back exactly.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn parse_matrix(text: &str, source: &str) -> Result<DenseMatrix> {
    let perr = |line: usize, col: usize, msg: String| Error::Parse {
        path: source.to_string(),
        line,
        col,
        msg,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(1, |p| p.line() as usize);
            perr(line, 1, e.to_string())
        })?;
        let line = rec.position().map_or(1, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(rec.len());
        for (col, field) in rec.iter().enumerate() {
            let err = |msg: String| perr(line, col + 1, msg);
            if field.is_empty() {
                return Err(err("empty field".into()));
            }
            let v: f64 = field
                .parse()
                .map_err(|_| err(format!("not a number: {field:?}")))?;
            if !v.is_finite() {
                return Err(err(format!("non-finite value {field:?}")));
            }
            row.push(v);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                let msg = format!("expected {w} fields, found {}", row.len());
                return Err(perr(line, row.len().min(w) + 1, msg));
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(perr(1, 1, "no data rows".into()));
    }
    DenseMatrix::from_rows(&rows)
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_matrix(&text, &path.display().to_string())
}

pub fn format_matrix(m: &DenseMatrix) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for i in 0..m.rows() {
        w.write_record((0..m.cols()).map(|j| fmt_f64(m[(i, j)])))
            .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("ascii output")
}

pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<()> {
    fs::write(path, format_matrix(m)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
