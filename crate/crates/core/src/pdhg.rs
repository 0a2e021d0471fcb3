//! Primal-dual hybrid gradient on the conic pair `min 0 s.t. A x = b, x in K`,
//! used to estimate the limiting iterate displacement of separable ESP
//! instances. Its dual block converges to the same vector as the FISTA
//! residual, which makes it an independent reference for that residual.

use nalgebra::DVector;

use crate::esp::EspInstance;
use crate::linalg::LinearOperator;
use crate::projection::project_product_cone_flat;

#[derive(Debug, Clone, PartialEq)]
pub struct PdhgState {
    /// Primal block, one cone block per ellipsoid.
    pub x: DVector<f64>,
    /// Dual block of length `d + 2`.
    pub y: DVector<f64>,
    pub sigma: f64,
    pub tau: f64,
    pub k: usize,
}

impl PdhgState {
    /// Zero start with `sigma = 0.9 / L` and `tau = 1`.
    pub fn new(inst: &EspInstance) -> Self {
        Self {
            x: DVector::zeros(inst.n_vars()),
            y: DVector::zeros(inst.dim + 2),
            sigma: 0.9 / inst.lipschitz,
            tau: 1.0,
            k: 0,
        }
    }
}

/// `x+ = P_K(x - sigma A^T y)`, `y+ = y + tau (A (2 x+ - x) - b)`.
pub fn pdhg_step(state: &mut PdhgState, inst: &EspInstance) {
    let mut aty = DVector::zeros(state.x.len());
    inst.apply_transpose(&state.y, &mut aty);
    let mut x_next = &state.x - aty * state.sigma;
    project_product_cone_flat(x_next.as_mut_slice(), inst.block_len());
    let extrapolated = &x_next * 2.0 - &state.x;
    let mut ax = DVector::zeros(state.y.len());
    inst.apply(&extrapolated, &mut ax);
    state.y += (ax - inst.rhs()) * state.tau;
    state.x = x_next;
    state.k += 1;
}

/// Displacement `(x_k - x_{k+1}, y_k - y_{k+1})` of the last of `iters` steps
/// from the zero start. With this orientation the dual block approximates the
/// limit of `b - A x_k`.
pub fn displacement_estimate(inst: &EspInstance, iters: usize) -> (DVector<f64>, DVector<f64>) {
    assert!(iters >= 1, "iters must be at least 1");
    let mut state = PdhgState::new(inst);
    for _ in 0..iters - 1 {
        pdhg_step(&mut state, inst);
    }
    let (x_prev, y_prev) = (state.x.clone(), state.y.clone());
    pdhg_step(&mut state, inst);
    (x_prev - state.x, y_prev - state.y)
}

/// Squared norm of `(dx, dy)` in the metric `(1/sigma)|dx|^2 - 2 dy^T A dx + (1/tau)|dy|^2`
/// in which the iteration is firmly nonexpansive.
pub fn metric_norm_squared(inst: &EspInstance, sigma: f64, tau: f64, dx: &DVector<f64>, dy: &DVector<f64>) -> f64 {
    let mut adx = DVector::zeros(dy.len());
    inst.apply(dx, &mut adx);
    dx.norm_squared() / sigma - 2.0 * dy.dot(&adx) + dy.norm_squared() / tau
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::esp::{normalize_instance, reference_solution, Ellipsoid, Label};
    use nalgebra::DMatrix;

    fn pair(gap: f64, r: f64) -> EspInstance {
        normalize_instance(vec![
            Ellipsoid::dense(&[-gap, 0.0], DMatrix::identity(2, 2) * r, Label::ClassC).unwrap(),
            Ellipsoid::dense(&[gap, 0.0], DMatrix::identity(2, 2) * r, Label::ClassD).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn step_sizes() {
        let inst = pair(0.5, 0.1);
        let s = PdhgState::new(&inst);
        assert_eq!(s.tau, 1.0);
        assert!(s.sigma * inst.operator_norm().powi(2) < 1.0);
    }

    #[test]
    fn consistent_fixed_point_is_unchanged() {
        let inst = pair(0.0, 1.0);
        let mut s = PdhgState::new(&inst);
        s.x[0] = 1.0;
        s.x[3] = 1.0;
        let before = s.clone();
        pdhg_step(&mut s, &inst);
        assert_eq!((s.x, s.y), (before.x, before.y));
    }

    #[test]
    fn overlapping_instance_has_vanishing_displacement() {
        let inst = pair(0.05, 0.5);
        let (vr, vd) = displacement_estimate(&inst, 20_000);
        assert!(vr.norm() < 1e-4 && vd.norm() < 1e-4, "{} {}", vr.norm(), vd.norm());
    }

    #[test]
    fn separable_dual_displacement_matches_fista_limit() {
        let inst = pair(0.6, 0.2);
        let (vr, vd) = displacement_estimate(&inst, 10_000);
        let reference = reference_solution(&inst, 100_000, 1e-10).unwrap();
        let lim = reference.residual.to_vector();
        assert!((&vd - &lim).norm() <= 1e-3 * lim.norm().max(1.0), "{vd} vs {lim}");
        assert!(vr.norm() < 1e-3);
        assert!((vd[0] + vd[1] - vd.norm_squared()).abs() < 1e-3);
    }
}
