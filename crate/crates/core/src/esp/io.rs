//! JSON instance files:
//!
//! ```json
//! {"dim": 2, "ellipsoids": [{"label": "C", "center": [-1, 0], "shape": [[0.1, 0], [0, 0.1]]}]}
//! ```
//!
//! `shape` holds the rows of the shape matrix. A diagonal shape may instead be
//! given as `"shape_diagonal": [...]`.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Ellipsoid, Label, ShapeMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub dim: usize,
    pub ellipsoids: Vec<EllipsoidRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidRecord {
    pub label: Label,
    pub center: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape_diagonal: Option<Vec<f64>>,
}

impl InstanceFile {
    pub fn from_ellipsoids(ellipsoids: &[Ellipsoid]) -> Self {
        let dim = ellipsoids.first().map_or(0, Ellipsoid::dim);
        let ellipsoids = ellipsoids
            .iter()
            .map(|e| {
                let (shape, shape_diagonal) = match &e.shape {
                    ShapeMatrix::Dense(m) => (
                        Some(m.row_iter().map(|r| r.iter().copied().collect()).collect()),
                        None,
                    ),
                    ShapeMatrix::Diagonal(v) => (None, Some(v.as_slice().to_vec())),
                };
                EllipsoidRecord {
                    label: e.label,
                    center: e.center.as_slice().to_vec(),
                    shape,
                    shape_diagonal,
                }
            })
            .collect();
        Self { dim, ellipsoids }
    }

    pub fn into_ellipsoids(self) -> Result<Vec<Ellipsoid>> {
        let d = self.dim;
        self.ellipsoids
            .into_iter()
            .enumerate()
            .map(|(i, rec)| {
                let bad = |msg: String| Error::InvalidArgument(format!("ellipsoid {i}: {msg}"));
                if rec.center.len() != d {
                    return Err(bad(format!("center has length {}, expected {d}", rec.center.len())));
                }
                let shape = match (rec.shape, rec.shape_diagonal) {
                    (Some(rows), None) => {
                        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                            return Err(bad(format!("shape must be {d}x{d}")));
                        }
                        ShapeMatrix::Dense(DMatrix::from_fn(d, d, |r, c| rows[r][c]))
                    }
                    (None, Some(diag)) => {
                        if diag.len() != d {
                            return Err(bad(format!("shape_diagonal has length {}, expected {d}", diag.len())));
                        }
                        ShapeMatrix::Diagonal(DVector::from_vec(diag))
                    }
                    _ => return Err(bad("exactly one of shape and shape_diagonal is required".into())),
                };
                Ellipsoid::new(DVector::from_vec(rec.center), shape, rec.label)
                    .map_err(|e| bad(e.to_string()))
            })
            .collect()
    }
}

pub fn read_instance(path: &Path) -> Result<Vec<Ellipsoid>> {
    let text = fs::read_to_string(path)?;
    let file: InstanceFile = serde_json::from_str(&text)?;
    file.into_ellipsoids()
}

pub fn write_instance(path: &Path, ellipsoids: &[Ellipsoid]) -> Result<()> {
    let text = serde_json::to_string_pretty(&InstanceFile::from_ellipsoids(ellipsoids))?;
    fs::write(path, text + "\n")?;
    Ok(())
}
