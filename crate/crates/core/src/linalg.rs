//! Small dense linear-algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

/// A linear map `R^ncols -> R^nrows` that can be applied with and without
/// transposition, without necessarily materializing the matrix.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `out = A x`
    fn apply(&self, x: &DVector<f64>, out: &mut DVector<f64>);
    /// `out = A^T y`
    fn apply_transpose(&self, y: &DVector<f64>, out: &mut DVector<f64>);
}

impl LinearOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn apply(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        out.gemv(1.0, self, x, 0.0);
    }

    fn apply_transpose(&self, y: &DVector<f64>, out: &mut DVector<f64>) {
        out.gemv_tr(1.0, self, y, 0.0);
    }
}

/// Largest singular value of a small dense matrix via a full SVD.
pub(crate) fn dense_spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Smallest singular value of a small dense matrix via a full SVD.
pub(crate) fn dense_min_singular_value(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().min()
}

/// Euclidean norm of the difference of two equally sized slices.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn all_finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}
