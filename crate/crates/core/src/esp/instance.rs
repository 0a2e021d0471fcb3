use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fista::lipschitz_of_least_squares;
use crate::linalg::{dense_min_singular_value, dense_spectral_norm, LinearOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "C")]
    ClassC,
    #[serde(rename = "D")]
    ClassD,
}

/// Shape matrix of an ellipsoid `{z : |S^{-1}(z - c)| <= 1}`. Image-derived
/// ellipsoids have diagonal shapes, which are kept diagonal so that large
/// instances never materialize `d x d` blocks.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeMatrix {
    Dense(DMatrix<f64>),
    Diagonal(DVector<f64>),
}

impl ShapeMatrix {
    pub fn dim(&self) -> usize {
        match self {
            ShapeMatrix::Dense(m) => m.nrows(),
            ShapeMatrix::Diagonal(v) => v.len(),
        }
    }

    pub fn spectral_norm(&self) -> f64 {
        match self {
            ShapeMatrix::Dense(m) => dense_spectral_norm(m),
            ShapeMatrix::Diagonal(v) => v.amax(),
        }
    }

    pub fn min_singular_value(&self) -> f64 {
        match self {
            ShapeMatrix::Dense(m) => dense_min_singular_value(m),
            ShapeMatrix::Diagonal(v) => v.iter().fold(f64::INFINITY, |a, x| a.min(x.abs())),
        }
    }

    /// `out += S x`
    pub fn mul_add(&self, x: &[f64], out: &mut [f64]) {
        match self {
            ShapeMatrix::Dense(m) => {
                for (c, &xc) in x.iter().enumerate() {
                    if xc != 0.0 {
                        for (o, a) in out.iter_mut().zip(m.column(c).iter()) {
                            *o += a * xc;
                        }
                    }
                }
            }
            ShapeMatrix::Diagonal(v) => {
                for ((o, a), xi) in out.iter_mut().zip(v.iter()).zip(x) {
                    *o += a * xi;
                }
            }
        }
    }

    /// `out = S^T y`
    pub fn tr_mul(&self, y: &[f64], out: &mut [f64]) {
        match self {
            ShapeMatrix::Dense(m) => {
                for (c, o) in out.iter_mut().enumerate() {
                    *o = m.column(c).iter().zip(y).map(|(a, b)| a * b).sum();
                }
            }
            ShapeMatrix::Diagonal(v) => {
                for ((o, a), yi) in out.iter_mut().zip(v.iter()).zip(y) {
                    *o = a * yi;
                }
            }
        }
    }

    /// `|S^T y|`
    pub fn tr_mul_norm(&self, y: &[f64]) -> f64 {
        match self {
            ShapeMatrix::Dense(m) => (0..m.ncols())
                .map(|c| {
                    let s: f64 = m.column(c).iter().zip(y).map(|(a, b)| a * b).sum();
                    s * s
                })
                .sum::<f64>()
                .sqrt(),
            ShapeMatrix::Diagonal(v) => v.iter().zip(y).map(|(a, b)| (a * b) * (a * b)).sum::<f64>().sqrt(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            ShapeMatrix::Dense(m) => m.clone(),
            ShapeMatrix::Diagonal(v) => DMatrix::from_diagonal(v),
        }
    }

    fn unscale(&mut self, factor: f64) {
        match self {
            ShapeMatrix::Dense(m) => *m /= factor,
            ShapeMatrix::Diagonal(v) => *v /= factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    pub center: DVector<f64>,
    pub shape: ShapeMatrix,
    pub label: Label,
}

impl Ellipsoid {
    /// Validates that the shape is square, matches the center, and is
    /// nonsingular (smallest singular value above `1e-12` times the largest).
    pub fn new(center: DVector<f64>, shape: ShapeMatrix, label: Label) -> Result<Self> {
        if let ShapeMatrix::Dense(m) = &shape {
            if m.nrows() != m.ncols() {
                return Err(Error::DimensionMismatch(format!(
                    "shape matrix is {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        if shape.dim() != center.len() {
            return Err(Error::DimensionMismatch(format!(
                "center has length {} but shape is {}x{}",
                center.len(),
                shape.dim(),
                shape.dim()
            )));
        }
        let (smin, smax) = (shape.min_singular_value(), shape.spectral_norm());
        if !(smin > 1e-12 * smax) {
            return Err(Error::DegenerateInstance(format!(
                "shape matrix is singular (singular values in [{smin:e}, {smax:e}])"
            )));
        }
        Ok(Self { center, shape, label })
    }

    pub fn dense(center: &[f64], shape: DMatrix<f64>, label: Label) -> Result<Self> {
        Self::new(DVector::from_column_slice(center), ShapeMatrix::Dense(shape), label)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }
}

/// A normalized ellipsoid separation instance. Class-C ellipsoids come first
/// and occupy blocks `0..j`; class-D ellipsoids occupy blocks `j..j+l`. Each
/// block of the dual variable is `(scalar, vector of length dim)`.
#[derive(Debug, Clone)]
pub struct EspInstance {
    pub ellipsoids: Vec<Ellipsoid>,
    pub dim: usize,
    pub j: usize,
    pub l: usize,
    /// Step constant `1.01 |A|^2` for the least-squares objective.
    pub lipschitz: f64,
    /// Common divisor applied to all centers and shapes.
    pub normalization_factor: f64,
}

/// Divides every center and shape by `max_i max(|c_i|, |A_i|_2)`, orders the
/// ellipsoids class C first, and computes the step constant.
pub fn normalize_instance(ellipsoids: Vec<Ellipsoid>) -> Result<EspInstance> {
    let dim = ellipsoids
        .first()
        .map(Ellipsoid::dim)
        .ok_or_else(|| Error::DegenerateInstance("no ellipsoids".into()))?;
    if let Some(e) = ellipsoids.iter().find(|e| e.dim() != dim) {
        return Err(Error::DimensionMismatch(format!(
            "ellipsoids have dimensions {dim} and {}",
            e.dim()
        )));
    }
    let (mut c_part, d_part): (Vec<_>, Vec<_>) = ellipsoids.into_iter().partition(|e| e.label == Label::ClassC);
    let (j, l) = (c_part.len(), d_part.len());
    if j == 0 || l == 0 {
        return Err(Error::DegenerateInstance(format!(
            "need at least one ellipsoid per class, got {j} of class C and {l} of class D"
        )));
    }
    c_part.extend(d_part);
    let mut ellipsoids = c_part;

    let factor = ellipsoids
        .iter()
        .map(|e| e.center.norm().max(e.shape.spectral_norm()))
        .fold(0.0, f64::max);
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(Error::DegenerateInstance(format!("normalization factor is {factor}")));
    }
    if factor != 1.0 {
        for e in &mut ellipsoids {
            e.center /= factor;
            e.shape.unscale(factor);
        }
    }
    let mut inst = EspInstance {
        ellipsoids,
        dim,
        j,
        l,
        lipschitz: 0.0,
        normalization_factor: factor,
    };
    inst.lipschitz = lipschitz_of_least_squares(&inst)?;
    Ok(inst)
}

impl EspInstance {
    pub fn n_blocks(&self) -> usize {
        self.j + self.l
    }

    pub fn block_len(&self) -> usize {
        self.dim + 1
    }

    /// Length of the dual variable, `(j + l)(d + 1)`.
    pub fn n_vars(&self) -> usize {
        self.n_blocks() * self.block_len()
    }

    /// `b = (1, 1, 0, ..., 0)`
    pub fn rhs(&self) -> DVector<f64> {
        let mut b = DVector::zeros(self.dim + 2);
        b[0] = 1.0;
        b[1] = 1.0;
        b
    }

    /// `1/2 |A x - b|^2`
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * super::residual(self, x).norm_squared()
    }

    /// The dense `(d + 2) x (j + l)(d + 1)` operator.
    pub fn assemble_operator(&self) -> (DMatrix<f64>, DVector<f64>) {
        let d = self.dim;
        let bl = self.block_len();
        let mut a = DMatrix::zeros(d + 2, self.n_vars());
        for (i, e) in self.ellipsoids.iter().enumerate() {
            let col = i * bl;
            let shape = e.shape.to_dense();
            if e.label == Label::ClassC {
                a[(0, col)] = 1.0;
                a.view_mut((2, col), (d, 1)).copy_from(&e.center);
            } else {
                a[(1, col)] = 1.0;
                a.view_mut((2, col), (d, 1)).copy_from(&(-&e.center));
            }
            a.view_mut((2, col + 1), (d, d)).copy_from(&shape);
        }
        (a, self.rhs())
    }

    /// Operator norm `|A|`, recovered from the stored step constant.
    pub fn operator_norm(&self) -> f64 {
        (self.lipschitz / 1.01).sqrt()
    }
}

impl LinearOperator for EspInstance {
    fn nrows(&self) -> usize {
        self.dim + 2
    }

    fn ncols(&self) -> usize {
        self.n_vars()
    }

    fn apply(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        let bl = self.block_len();
        out.fill(0.0);
        let (head, tail) = out.as_mut_slice().split_at_mut(2);
        for (e, block) in self.ellipsoids.iter().zip(x.as_slice().chunks_exact(bl)) {
            let scalar = block[0];
            let sign = match e.label {
                Label::ClassC => {
                    head[0] += scalar;
                    1.0
                }
                Label::ClassD => {
                    head[1] += scalar;
                    -1.0
                }
            };
            if scalar != 0.0 {
                for (o, c) in tail.iter_mut().zip(e.center.iter()) {
                    *o += sign * scalar * c;
                }
            }
            e.shape.mul_add(&block[1..], tail);
        }
    }

    fn apply_transpose(&self, y: &DVector<f64>, out: &mut DVector<f64>) {
        let bl = self.block_len();
        let yw = &y.as_slice()[2..];
        for (e, block) in self.ellipsoids.iter().zip(out.as_mut_slice().chunks_exact_mut(bl)) {
            let cw: f64 = e.center.iter().zip(yw).map(|(a, b)| a * b).sum();
            block[0] = match e.label {
                Label::ClassC => y[0] + cw,
                Label::ClassD => y[1] - cw,
            };
            e.shape.tr_mul(yw, &mut block[1..]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball(center: &[f64], r: f64, label: Label) -> Ellipsoid {
        let d = center.len();
        Ellipsoid::dense(center, DMatrix::identity(d, d) * r, label).unwrap()
    }

    #[test]
    fn rejects_singular_and_mismatched_shapes() {
        let sing = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(Ellipsoid::dense(&[0.0, 0.0], sing, Label::ClassC).is_err());
        assert!(Ellipsoid::dense(&[0.0], DMatrix::identity(2, 2), Label::ClassC).is_err());
        assert!(Ellipsoid::dense(&[0.0, 0.0], DMatrix::zeros(2, 3), Label::ClassC).is_err());
    }

    #[test]
    fn normalization_factor_is_the_largest_center_or_shape_norm() {
        let inst = normalize_instance(vec![ball(&[-0.9, 0.0], 0.05, Label::ClassC), ball(&[0.9, 0.0], 0.05, Label::ClassD)]).unwrap();
        assert!((inst.normalization_factor - 0.9).abs() < 1e-15);
        assert!((inst.ellipsoids[0].center[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalized_data_is_left_alone() {
        let es = vec![ball(&[-1.0, 0.0], 0.5, Label::ClassC), ball(&[0.0, 0.5], 0.5, Label::ClassD)];
        let inst = normalize_instance(es.clone()).unwrap();
        assert_eq!(inst.normalization_factor, 1.0);
        assert_eq!(inst.ellipsoids, es);
    }

    #[test]
    fn normalization_errors() {
        assert!(normalize_instance(vec![ball(&[1.0], 1.0, Label::ClassC)]).is_err());
        assert!(normalize_instance(vec![]).is_err());
        assert!(normalize_instance(vec![ball(&[1.0], 1.0, Label::ClassC), ball(&[1.0, 0.0], 1.0, Label::ClassD)]).is_err());
    }

    #[test]
    fn classes_are_reordered_c_first() {
        let inst = normalize_instance(vec![
            ball(&[1.0, 0.0], 0.1, Label::ClassD),
            ball(&[-1.0, 0.0], 0.1, Label::ClassC),
            ball(&[0.0, 1.0], 0.1, Label::ClassD),
        ])
        .unwrap();
        assert_eq!((inst.j, inst.l), (1, 2));
        assert_eq!(inst.ellipsoids[0].label, Label::ClassC);
        assert_eq!(inst.ellipsoids[2].center[1], 1.0);
    }

    #[test]
    fn operator_shape_and_rhs() {
        let inst = normalize_instance(vec![ball(&[-0.5, 0.0], 0.1, Label::ClassC), ball(&[0.5, 0.0], 0.1, Label::ClassD)]).unwrap();
        let (a, b) = inst.assemble_operator();
        assert_eq!(a.transpose().shape(), (6, 4));
        assert_eq!(b.as_slice(), &[1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn diagonal_and_dense_shapes_agree() {
        let diag = DVector::from_column_slice(&[0.3, 0.7, 0.2]);
        let dense = ShapeMatrix::Dense(DMatrix::from_diagonal(&diag));
        let diag = ShapeMatrix::Diagonal(diag);
        let y = [1.0, -2.0, 0.5];
        let (mut a, mut b) = ([0.0; 3], [0.0; 3]);
        dense.tr_mul(&y, &mut a);
        diag.tr_mul(&y, &mut b);
        assert_eq!(a, b);
        assert_eq!(dense.tr_mul_norm(&y), diag.tr_mul_norm(&y));
        assert!((dense.spectral_norm() - diag.spectral_norm()).abs() < 1e-15);
        let (mut a, mut b) = ([1.0; 3], [1.0; 3]);
        dense.mul_add(&y, &mut a);
        diag.mul_add(&y, &mut b);
        assert_eq!(a, b);
    }
}
