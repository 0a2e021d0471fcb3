//! Ellipsoid separation through FISTA on the dual second-order cone program
//!
//! ```text
//! min 1/2 |A x - b|^2   s.t.   x in K^{d+1} x ... x K^{d+1}
//! ```
//!
//! The residual `v = b - A x = (s, t, w)` of any iterate yields the candidate
//! hyperplane `{z : w^T z = (t - s)/2}`, which is checked against every
//! ellipsoid exactly.

mod instance;
mod io;
mod solve;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::linalg::LinearOperator;

pub use instance::{normalize_instance, Ellipsoid, EspInstance, Label, ShapeMatrix};
pub use io::{read_instance, write_instance, InstanceFile};
pub use solve::{
    reference_solution, solve_esp, EspMode, EspOutcome, EspProblem, EspRun, EspTraceRow, ReferenceSolution,
};

/// The residual `b - A x` split as `(s, t, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EspResidual {
    pub s: f64,
    pub t: f64,
    pub w: DVector<f64>,
    pub norm: f64,
}

impl EspResidual {
    pub fn from_vector(v: &DVector<f64>) -> Self {
        Self {
            s: v[0],
            t: v[1],
            w: v.rows(2, v.len() - 2).into_owned(),
            norm: v.norm(),
        }
    }

    pub fn to_vector(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.w.len() + 2);
        v[0] = self.s;
        v[1] = self.t;
        v.rows_mut(2, self.w.len()).copy_from(&self.w);
        v
    }

    pub fn norm_squared(&self) -> f64 {
        self.norm * self.norm
    }
}

/// `b - A x` as a plain vector.
pub fn residual_vector(inst: &EspInstance, x: &DVector<f64>) -> DVector<f64> {
    let mut ax = DVector::zeros(inst.dim + 2);
    inst.apply(x, &mut ax);
    inst.rhs() - ax
}

pub fn residual(inst: &EspInstance, x: &DVector<f64>) -> EspResidual {
    EspResidual::from_vector(&residual_vector(inst, x))
}

/// `(w, (t - s)/2)`
pub fn candidate_separator(r: &EspResidual) -> (DVector<f64>, f64) {
    (r.w.clone(), 0.5 * (-r.s + r.t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// Class C lies in `{w^T z < m}`, class D in `{w^T z > m}`.
    CBelow,
    /// Class C lies in `{w^T z > m}`, class D in `{w^T z < m}`.
    CAbove,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparatorVerdict {
    SeparatesCBelow,
    SeparatesCAbove,
    NotSeparating,
}

impl SeparatorVerdict {
    pub fn orientation(self) -> Option<Orientation> {
        match self {
            SeparatorVerdict::SeparatesCBelow => Some(Orientation::CBelow),
            SeparatorVerdict::SeparatesCAbove => Some(Orientation::CAbove),
            SeparatorVerdict::NotSeparating => None,
        }
    }
}

/// Tests whether `{z : w^T z = m}` strictly separates the two classes. An
/// ellipsoid with center `c` and shape `S` spans `[c^T w - |S^T w|, c^T w + |S^T w|]`
/// along `w`. All comparisons are strict and exact.
pub fn verify_separator(inst: &EspInstance, w: &DVector<f64>, m: f64) -> SeparatorVerdict {
    if w.iter().all(|&x| x == 0.0) {
        return SeparatorVerdict::NotSeparating;
    }
    let mut below = true;
    let mut above = true;
    for e in &inst.ellipsoids {
        let cw = e.center.dot(w);
        let spread = e.shape.tr_mul_norm(w.as_slice());
        let (lo, hi) = (cw - spread, cw + spread);
        match e.label {
            Label::ClassC => {
                below &= hi < m;
                above &= lo > m;
            }
            Label::ClassD => {
                below &= lo > m;
                above &= hi < m;
            }
        }
        if !below && !above {
            return SeparatorVerdict::NotSeparating;
        }
    }
    if below {
        SeparatorVerdict::SeparatesCBelow
    } else {
        SeparatorVerdict::SeparatesCAbove
    }
}

/// A verified separating hyperplane `{z : w^T z = offset}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatorModel {
    pub w: Vec<f64>,
    pub offset: f64,
    pub found_at_iteration: usize,
    pub orientation: Orientation,
}

impl SeparatorModel {
    /// Builds the model from a candidate, returning `None` unless it verifies.
    pub fn verified(inst: &EspInstance, w: DVector<f64>, offset: f64, iteration: usize) -> Option<Self> {
        let orientation = verify_separator(inst, &w, offset).orientation()?;
        Some(Self {
            w: w.as_slice().to_vec(),
            offset,
            found_at_iteration: iteration,
            orientation,
        })
    }

    /// The same hyperplane expressed for the instance before normalization.
    pub fn denormalized(&self, factor: f64) -> Self {
        Self {
            offset: self.offset * factor,
            ..self.clone()
        }
    }
}

/// `3 |r|`, an upper estimate of the smallest center perturbation that
/// destroys separability when `r` approximates the limiting residual.
pub fn delta_estimate(r: &EspResidual) -> f64 {
    3.0 * r.norm
}

/// Iterations after which the residual is guaranteed to encode a separator:
/// `54 sqrt(2) |A| |x0 - xbar| / delta^2 - 1`.
pub fn iteration_bound(operator_norm: f64, start_distance: f64, delta: f64) -> f64 {
    54.0 * std::f64::consts::SQRT_2 * operator_norm * start_distance / (delta * delta) - 1.0
}

/// Radius around the limiting residual `v_D` inside which every residual's
/// candidate separates: `|v_D|^2 / sqrt(18)`.
pub fn separation_radius(limit_norm: f64) -> f64 {
    limit_norm * limit_norm / 18f64.sqrt()
}

/// The same radius expressed through the perturbation size: `delta^2 / (27 sqrt(2))`.
pub fn separation_radius_from_delta(delta: f64) -> f64 {
    delta * delta / (27.0 * std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn two_balls(gap: f64, r: f64) -> EspInstance {
        normalize_instance(vec![
            Ellipsoid::dense(&[-gap, 0.0], DMatrix::identity(2, 2) * r, Label::ClassC).unwrap(),
            Ellipsoid::dense(&[gap, 0.0], DMatrix::identity(2, 2) * r, Label::ClassD).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn zero_iterate_residual_is_rhs() {
        let inst = two_balls(0.9, 0.05);
        let r = residual(&inst, &DVector::zeros(inst.n_vars()));
        assert_eq!((r.s, r.t, r.norm), (1.0, 1.0, 2f64.sqrt()));
        assert!(r.w.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn residual_norm_matches_objective() {
        let inst = two_balls(0.5, 0.2);
        let x = DVector::from_fn(inst.n_vars(), |i, _| (i as f64 * 0.7).cos());
        let r = residual(&inst, &x);
        assert!((r.norm - (2.0 * inst.objective(&x)).sqrt()).abs() < 1e-14);
        assert!((r.to_vector().norm() - r.norm).abs() < 1e-15);
    }

    #[test]
    fn feasible_point_has_zero_residual() {
        // same ball in both classes: (lambda, p) = (1, 0) in each block solves A x = b
        let inst = two_balls(0.0, 1.0);
        let mut x = DVector::zeros(inst.n_vars());
        x[0] = 1.0;
        x[3] = 1.0;
        assert_eq!(residual(&inst, &x).norm, 0.0);
    }

    #[test]
    fn candidate_offset() {
        let mk = |s, t| EspResidual::from_vector(&DVector::from_column_slice(&[s, t, 0.3, -0.1]));
        assert!((candidate_separator(&mk(0.2, 0.4)).1 - 0.1).abs() < 1e-16);
        assert_eq!(candidate_separator(&mk(0.7, 0.7)).1, 0.0);
        assert_eq!(candidate_separator(&mk(-1.0, 1.0)).1, 1.0);
    }

    #[test]
    fn verify_axis_separator() {
        let inst = two_balls(0.9, 0.05);
        let e1 = DVector::from_column_slice(&[1.0, 0.0]);
        assert_eq!(verify_separator(&inst, &e1, 0.0), SeparatorVerdict::SeparatesCBelow);
        assert_eq!(verify_separator(&inst, &(-&e1), 0.0), SeparatorVerdict::SeparatesCAbove);
        assert_eq!(verify_separator(&inst, &e1, 1.0), SeparatorVerdict::NotSeparating);
        assert_eq!(verify_separator(&inst, &DVector::zeros(2), 0.0), SeparatorVerdict::NotSeparating);
    }

    #[test]
    fn touching_balls_are_not_strictly_separated() {
        let inst = two_balls(0.5, 0.5);
        let e1 = DVector::from_column_slice(&[1.0, 0.0]);
        assert_eq!(verify_separator(&inst, &e1, 0.0), SeparatorVerdict::NotSeparating);
    }

    #[test]
    fn denormalized_offset_scales() {
        let m = SeparatorModel {
            w: vec![1.0, 0.0],
            offset: 0.25,
            found_at_iteration: 3,
            orientation: Orientation::CBelow,
        };
        assert_eq!(m.denormalized(4.0).offset, 1.0);
    }

    #[test]
    fn delta_estimate_and_bounds() {
        let r0 = EspResidual::from_vector(&DVector::zeros(4));
        assert_eq!(delta_estimate(&r0), 0.0);
        let r = EspResidual::from_vector(&DVector::from_column_slice(&[0.0, 0.0, 0.1, 0.0]));
        assert!((delta_estimate(&r) - 0.3).abs() < 1e-15);
        assert!((separation_radius_from_delta(3.0) - 9.0 / (27.0 * 2f64.sqrt())).abs() < 1e-15);
        let k = iteration_bound(1.0, 1.0, 1.0);
        assert!((k - (54.0 * 2f64.sqrt() - 1.0)).abs() < 1e-12);
    }
}
