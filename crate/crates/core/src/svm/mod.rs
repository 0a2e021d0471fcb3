//! Soft-margin SVM through FISTA on the strongly concave perturbed dual
//!
//! ```text
//! max g(u, v) = -1/2 |C^T u - D^T v|^2 + e^T u + e^T v - mu/2 (|u|^2 + |v|^2)
//! s.t. e^T u = e^T v,  0 <= u, v <= gamma
//! ```
//!
//! with `gamma = 64/n` and `mu = n/128`, so that the smoothed hinge loss
//! [`psi`] has its breakpoints at margins `1/2` and `1`.

mod dual;
mod libsvm;
mod psi;
mod theory;
mod tracker;
mod train;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use dual::{dual_gradient, dual_objective, extract_w, proximity_bound, solve_dual, DualProblem};
pub use libsvm::{parse_libsvm, read_libsvm, write_libsvm, LabeledData};
pub use psi::{psi, psi_prime};
pub use theory::{theory_constants, unperturbed_kkt_residual, KktPoint, TheoryConstants};
pub use tracker::ClassificationTracker;
pub use train::{
    accuracy, intercept_bisection, predict, read_model, train, train_with, write_model, SvmModel, SvmTraceRow,
    SvmTrainRun,
};

/// Two labeled point sets, rows of `c_points` (class +1) and `d_points`
/// (class -1).
#[derive(Debug, Clone, PartialEq)]
pub struct SvmDataset {
    pub c_points: DMatrix<f64>,
    pub d_points: DMatrix<f64>,
    /// Exact largest row norm.
    pub radius: f64,
    /// Radius used for the step constant; equals `radius` unless the data were
    /// rescaled to unit radius, where it is exactly 1.
    pub radius_bound: f64,
    /// Factor the original features were multiplied by.
    pub scale: f64,
}

impl SvmDataset {
    pub fn new(c_points: DMatrix<f64>, d_points: DMatrix<f64>) -> Result<Self> {
        if c_points.nrows() == 0 || d_points.nrows() == 0 {
            return Err(Error::InvalidArgument(format!(
                "both classes need points, got {} and {}",
                c_points.nrows(),
                d_points.nrows()
            )));
        }
        if c_points.ncols() != d_points.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "class C has {} features, class D has {}",
                c_points.ncols(),
                d_points.ncols()
            )));
        }
        let radius = max_row_norm(&c_points).max(max_row_norm(&d_points));
        Ok(Self {
            c_points,
            d_points,
            radius,
            radius_bound: radius,
            scale: 1.0,
        })
    }

    /// Splits labeled rows by class (label `+1` is class C).
    pub fn from_labeled(data: &LabeledData) -> Result<Self> {
        let rows = |sign: i8| -> DMatrix<f64> {
            let idx: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == sign).collect();
            DMatrix::from_fn(idx.len(), data.points.ncols(), |r, c| data.points[(idx[r], c)])
        };
        Self::new(rows(1), rows(-1))
    }

    /// Scales all features by `1 / radius`, so the largest point has norm 1.
    pub fn scaled_to_unit_radius(&self) -> Result<Self> {
        if !(self.radius > 0.0) {
            return Err(Error::DegenerateInstance("all points are at the origin".into()));
        }
        let s = 1.0 / self.radius;
        let mut out = Self::new(&self.c_points * s, &self.d_points * s)?;
        out.radius_bound = 1.0;
        out.scale = self.scale * s;
        Ok(out)
    }

    pub fn j(&self) -> usize {
        self.c_points.nrows()
    }

    pub fn l(&self) -> usize {
        self.d_points.nrows()
    }

    pub fn n(&self) -> usize {
        self.j() + self.l()
    }

    pub fn dim(&self) -> usize {
        self.c_points.ncols()
    }
}

fn max_row_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmHyperparams {
    pub gamma: f64,
    pub mu: f64,
    /// `mu + n R^2`
    pub lipschitz: f64,
    /// `lipschitz / mu`
    pub kappa: f64,
}

impl SvmHyperparams {
    /// `gamma = 64/n`, `mu = n/128`.
    pub fn new(n: usize, radius: f64) -> Self {
        let n_f = n as f64;
        Self::custom(64.0 / n_f, n_f / 128.0, n, radius)
    }

    pub fn for_dataset(ds: &SvmDataset) -> Self {
        Self::new(ds.n(), ds.radius_bound)
    }

    pub fn custom(gamma: f64, mu: f64, n: usize, radius: f64) -> Self {
        let lipschitz = mu + n as f64 * radius * radius;
        Self {
            gamma,
            mu,
            lipschitz,
            kappa: lipschitz / mu,
        }
    }

    /// Margin below which the smoothed hinge loss is linear: `1 - mu gamma`.
    pub fn linear_breakpoint(&self) -> f64 {
        1.0 - self.mu * self.gamma
    }
}

/// Dual variables, `u` for class C and `v` for class D.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
}

impl DualPoint {
    pub fn zeros(j: usize, l: usize) -> Self {
        Self {
            u: DVector::zeros(j),
            v: DVector::zeros(l),
        }
    }

    pub fn from_flat(z: &DVector<f64>, j: usize) -> Self {
        Self {
            u: z.rows(0, j).into_owned(),
            v: z.rows(j, z.len() - j).into_owned(),
        }
    }

    pub fn to_flat(&self) -> DVector<f64> {
        let mut z = DVector::zeros(self.u.len() + self.v.len());
        z.rows_mut(0, self.u.len()).copy_from(&self.u);
        z.rows_mut(self.u.len(), self.v.len()).copy_from(&self.v);
        z
    }

    /// Membership in `Omega` with the sum constraint checked to `1e-10 n gamma`.
    pub fn in_omega(&self, gamma: f64) -> bool {
        let n = (self.u.len() + self.v.len()) as f64;
        let boxed = self.u.iter().chain(self.v.iter()).all(|&x| (0.0..=gamma).contains(&x));
        boxed && (self.u.sum() - self.v.sum()).abs() <= 1e-10 * n * gamma
    }
}
