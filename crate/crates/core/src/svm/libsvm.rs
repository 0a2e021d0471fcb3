//! LIBSVM sparse text format: `label index:value index:value ...` with
//! 1-based feature indices. Labels `+1`/`1` map to class C (`+1`); `-1`, `0`
//! and `2` map to class D (`-1`).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    /// One row per sample.
    pub points: DMatrix<f64>,
    /// `+1` or `-1` per row.
    pub labels: Vec<i8>,
}

impl LabeledData {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

fn map_label(token: &str) -> Option<i8> {
    let x = token.parse::<f64>().ok()?;
    if x == 1.0 {
        Some(1)
    } else if x == -1.0 || x == 0.0 || x == 2.0 {
        Some(-1)
    } else {
        None
    }
}

/// Parses LIBSVM text; `source` names the input in error messages. Blank
/// lines and `#` comments are skipped.
pub fn parse_libsvm(text: &str, source: &str) -> Result<LabeledData> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut dim = 0;
    for (lineno, raw) in text.lines().enumerate() {
        let err = |message: String| Error::Parse {
            path: source.to_string(),
            line: lineno + 1,
            message,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().expect("line is nonempty");
        let label = map_label(label_tok).ok_or_else(|| err(format!("unsupported label `{label_tok}`")))?;
        let mut row = Vec::new();
        let mut last = 0;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("expected index:value, found `{tok}`")))?;
            let idx: usize = idx.parse().map_err(|_| err(format!("bad feature index `{idx}`")))?;
            if idx == 0 {
                return Err(err("feature indices are 1-based".into()));
            }
            if idx <= last {
                return Err(err(format!("feature index {idx} is not increasing")));
            }
            let val: f64 = val.parse().map_err(|_| err(format!("bad feature value `{val}`")))?;
            if !val.is_finite() {
                return Err(err(format!("non-finite feature value `{val}`")));
            }
            last = idx;
            row.push((idx - 1, val));
        }
        dim = dim.max(last);
        rows.push(row);
        labels.push(label);
    }
    let mut points = DMatrix::zeros(rows.len(), dim);
    for (r, row) in rows.iter().enumerate() {
        for &(c, v) in row {
            points[(r, c)] = v;
        }
    }
    Ok(LabeledData { points, labels })
}

pub fn read_libsvm(path: &Path) -> Result<LabeledData> {
    let text = fs::read_to_string(path)?;
    parse_libsvm(&text, &path.display().to_string())
}

/// Writes every feature (including zeros) with 17 significant digits.
pub fn write_libsvm(path: &Path, data: &LabeledData) -> Result<()> {
    let mut out = String::new();
    for (r, &label) in data.labels.iter().enumerate() {
        out.push_str(if label > 0 { "+1" } else { "-1" });
        for c in 0..data.points.ncols() {
            write!(out, " {}:{:.16e}", c + 1, data.points[(r, c)]).expect("writing to a string");
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}
