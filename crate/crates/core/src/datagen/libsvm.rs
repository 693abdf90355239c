use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{HtError, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LibsvmOptions {
    /// Design width; defaults to the largest index seen. Indices beyond it
    /// are rejected.
    pub dim: Option<usize>,
    /// Map labels `−1 → 0` and `+1 → 1`; any other label is an error.
    pub map_pm1: bool,
}

fn parse_error<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(HtError::Parse {
        line,
        message: message.into(),
    })
}

/// Parses libsvm text (`label idx:val ...`, 1-based indices) into a dense
/// design and labels. Blank lines and lines starting with `#` are skipped.
/// Duplicate indices within a line are rejected.
pub fn parse_libsvm<S: Real, R: BufRead>(reader: R, options: LibsvmOptions) -> Result<(DenseMatrix<S>, Vec<S>)> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut max_index = 0usize;
    let mut seen = HashSet::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().unwrap_or_default();
        let Ok(mut label) = label_tok.parse::<f64>() else {
            return parse_error(lineno, format!("bad label {label_tok:?}"));
        };
        if !label.is_finite() {
            return parse_error(lineno, "label is not finite");
        }
        if options.map_pm1 {
            label = match label {
                l if l == 1.0 => 1.0,
                l if l == -1.0 => 0.0,
                l => return parse_error(lineno, format!("label {l} is not -1 or +1")),
            };
        }
        seen.clear();
        let mut entries = Vec::new();
        for tok in tokens {
            let Some((idx, val)) = tok.split_once(':') else {
                return parse_error(lineno, format!("feature {tok:?} is not idx:val"));
            };
            let Ok(idx) = idx.parse::<usize>() else {
                return parse_error(lineno, format!("bad index {idx:?}"));
            };
            if idx == 0 {
                return parse_error(lineno, "indices are 1-based; found 0");
            }
            let Ok(val) = val.parse::<f64>() else {
                return parse_error(lineno, format!("bad value {val:?}"));
            };
            if !val.is_finite() {
                return parse_error(lineno, format!("value at index {idx} is not finite"));
            }
            if !seen.insert(idx) {
                return parse_error(lineno, format!("duplicate index {idx}"));
            }
            if let Some(d) = options.dim {
                if idx > d {
                    return parse_error(lineno, format!("index {idx} exceeds the declared dimension {d}"));
                }
            }
            max_index = max_index.max(idx);
            entries.push((idx - 1, val));
        }
        rows.push(entries);
        labels.push(S::lit(label));
    }
    let d = options.dim.unwrap_or(max_index);
    let mut design = DenseMatrix::zeros(rows.len(), d);
    for (i, entries) in rows.iter().enumerate() {
        for &(j, v) in entries {
            design.set(i, j, S::lit(v));
        }
    }
    Ok((design, labels))
}

pub fn load_libsvm<S: Real>(path: impl AsRef<Path>, options: LibsvmOptions) -> Result<(DenseMatrix<S>, Vec<S>)> {
    parse_libsvm(BufReader::new(File::open(path)?), options)
}

/// Writes nonzero entries in libsvm format with round-trip float text.
pub fn write_libsvm<S: Real, W: Write>(mut out: W, design: &DenseMatrix<S>, labels: &[S]) -> Result<()> {
    for (i, &label) in labels.iter().enumerate().take(design.rows()) {
        write!(out, "{}", label.to_f64_lossy())?;
        for (j, v) in design.row(i).iter().enumerate() {
            if !v.is_zero() {
                write!(out, " {}:{}", j + 1, v.to_f64_lossy())?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}
