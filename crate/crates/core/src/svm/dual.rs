use nalgebra::DVector;

use super::{DualPoint, SvmDataset, SvmHyperparams};
use crate::error::Result;
use crate::fista::{self, Control, SmoothProblem, SolveOptions, StopReason, Variant};
use crate::projection::project_omega_flat;

/// `w = C^T u - D^T v`
pub fn extract_w(ds: &SvmDataset, p: &DualPoint) -> DVector<f64> {
    ds.c_points.tr_mul(&p.u) - ds.d_points.tr_mul(&p.v)
}

pub fn dual_objective(ds: &SvmDataset, hp: &SvmHyperparams, p: &DualPoint) -> f64 {
    let w = extract_w(ds, p);
    -0.5 * w.norm_squared() + p.u.sum() + p.v.sum() - 0.5 * hp.mu * (p.u.norm_squared() + p.v.norm_squared())
}

/// Gradient of `g`: `(-C w + e - mu u, D w + e - mu v)` with `w = C^T u - D^T v`.
pub fn dual_gradient(ds: &SvmDataset, hp: &SvmHyperparams, p: &DualPoint) -> DualPoint {
    let w = extract_w(ds, p);
    let u = (&ds.c_points * &w).map(|x| 1.0 - x) - &p.u * hp.mu;
    let v = (&ds.d_points * &w).map(|x| 1.0 + x) - &p.v * hp.mu;
    DualPoint { u, v }
}

/// `(2L/mu) |p - p_plus|`, a bound on the distance from `p_plus` to the
/// maximizer when `p_plus` is the projected gradient step from `p`.
pub fn proximity_bound(p: &DualPoint, p_plus: &DualPoint, hp: &SvmHyperparams) -> f64 {
    let step = ((&p.u - &p_plus.u).norm_squared() + (&p.v - &p_plus.v).norm_squared()).sqrt();
    2.0 * hp.kappa * step
}

/// `-g` over `Omega` on the stacked variable `(u, v)`.
pub struct DualProblem<'a> {
    pub dataset: &'a SvmDataset,
    pub hyperparams: SvmHyperparams,
}

impl SmoothProblem for DualProblem<'_> {
    fn dim(&self) -> usize {
        self.dataset.n()
    }

    fn gradient(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        let j = self.dataset.j();
        let g = dual_gradient(self.dataset, &self.hyperparams, &DualPoint::from_flat(x, j));
        out.rows_mut(0, j).copy_from(&(-g.u));
        out.rows_mut(j, g.v.len()).copy_from(&(-g.v));
    }

    fn lipschitz(&self) -> f64 {
        self.hyperparams.lipschitz
    }

    fn strong_convexity(&self) -> f64 {
        self.hyperparams.mu
    }

    fn project(&self, x: &mut DVector<f64>) {
        project_omega_flat(x.as_mut_slice(), self.dataset.j(), self.hyperparams.gamma);
    }
}

/// Maximizes the perturbed dual from `start` until the projected step from
/// the auxiliary point is below `step_tol` or `max_iter` is reached.
pub fn solve_dual(
    ds: &SvmDataset,
    hp: &SvmHyperparams,
    start: &DualPoint,
    max_iter: usize,
    step_tol: f64,
) -> Result<(DualPoint, usize)> {
    let prob = DualProblem {
        dataset: ds,
        hyperparams: *hp,
    };
    let mut x0 = start.to_flat();
    prob.project(&mut x0);
    let (report, state) = fista::solve(&prob, x0, SolveOptions::new(max_iter, Variant::StronglyConvex), |s| {
        if s.grad_map_norm < step_tol {
            Control::Stop(StopReason::ToleranceReached)
        } else {
            Control::Continue
        }
    })?;
    Ok((DualPoint::from_flat(&state.x, ds.j()), report.iterations))
}
