use nalgebra::DVector;
use serde::Serialize;

use super::SvmDataset;
use crate::error::{Error, Result};

/// Constants of the two-ball data model that govern which points are
/// certified and how good the early-stopped hyperplane is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryConstants {
    /// `1/(sigma - rho) - 1` with `sigma = min(sigma1, sigma2)`.
    pub delta: f64,
    /// `sqrt((1 + delta)^2 + 32 nu (11 + 8 delta)) - 1`
    pub xi: f64,
    /// Margin loss `K = 3(1 + xi + 64 nu) / (128 (sigma - rho)) + 3 rho (1 + xi)`.
    pub k: f64,
    /// `1 - 2K`; multiplied by `gamma` it bounds `gamma - u_i*` on planted points.
    pub delta0_factor: f64,
    /// `(1 - 2K) * 64/n`
    pub delta0: f64,
    /// Whether `(1 + xi + 64 nu) / (sigma - rho) <= 64/3`.
    pub assumption_ok: bool,
    /// Whether some margin target `Kbar` in `[1/2, 1)` satisfies the
    /// separation conditions (which also need `K < 1/2`).
    pub kbar_feasible: bool,
    /// Open lower end of the feasible `Kbar` range (the upper end is 1).
    pub kbar_lower: f64,
    /// The `Kbar` used for `big_delta`.
    pub kbar: Option<f64>,
    /// Dual accuracy that guarantees margins of `1 - Kbar` on planted points.
    pub big_delta: Option<f64>,
}

/// Evaluates the data-model constants. `kbar` defaults to the midpoint of
/// the feasible range; `big_delta` is omitted when the conditions cannot be met.
pub fn theory_constants(
    sigma1: f64,
    sigma2: f64,
    rho: f64,
    nu: f64,
    n: usize,
    kbar: Option<f64>,
) -> Result<TheoryConstants> {
    let sigma = sigma1.min(sigma2);
    for (name, s) in [("sigma1", sigma1), ("sigma2", sigma2)] {
        if !(0.5..=1.0).contains(&s) {
            return Err(Error::InvalidDataModel(format!("{name} = {s} is outside [1/2, 1]")));
        }
    }
    if !(rho > 0.0 && rho < sigma) {
        return Err(Error::InvalidDataModel(format!("rho = {rho} must lie in (0, {sigma})")));
    }
    if !(nu >= 0.0) {
        return Err(Error::InvalidDataModel(format!("nu = {nu} must be nonnegative")));
    }
    if n == 0 {
        return Err(Error::InvalidDataModel("n must be positive".into()));
    }
    let gap = sigma - rho;
    let delta = 1.0 / gap - 1.0;
    let xi = ((1.0 + delta).powi(2) + 32.0 * nu * (11.0 + 8.0 * delta)).sqrt() - 1.0;
    let k = 3.0 * (1.0 + xi + 64.0 * nu) / (128.0 * gap) + 3.0 * rho * (1.0 + xi);
    let assumption_ok = (1.0 + xi + 64.0 * nu) / gap <= 64.0 / 3.0;

    let slack = 3.0 * rho * (1.0 + xi) * (4.0 / 3.0 + 2.0 * nu) + 3.0 * nu * (9.0 / 4.0 + 2.0 * xi) + 0.5;
    let kbar_lower = (slack + 3.0 * k * k).max(0.5);
    let kbar_feasible = k < 0.5 && kbar_lower < 1.0;
    let admissible = |kb: f64| kbar_feasible && (0.5..1.0).contains(&kb) && kb - 3.0 * k * k > slack;
    let kbar = match kbar {
        Some(kb) => Some(kb),
        None if kbar_feasible => Some(0.5 * (kbar_lower + 1.0)),
        None => None,
    };
    let big_delta = kbar.filter(|&kb| admissible(kb)).map(|kb| {
        let numer = (kb - 3.0 * k * k) / 3.0 - rho * (1.0 + xi) * (4.0 / 3.0 + 2.0 * nu) - nu * (9.0 / 4.0 + 2.0 * xi) - 1.0 / 6.0;
        numer / (4.0 * (2.0 * n as f64).sqrt() * (1.0 + 2.0 * rho / 3.0))
    });
    Ok(TheoryConstants {
        delta,
        xi,
        k,
        delta0_factor: 1.0 - 2.0 * k,
        delta0: (1.0 - 2.0 * k) * 64.0 / n as f64,
        assumption_ok,
        kbar_feasible,
        kbar_lower,
        kbar,
        big_delta,
    })
}

/// A candidate primal-dual point of the unperturbed soft-margin problem.
#[derive(Debug, Clone, PartialEq)]
pub struct KktPoint {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    pub w: DVector<f64>,
    pub t: f64,
    pub s_c: DVector<f64>,
    pub s_d: DVector<f64>,
}

/// Largest violation of the optimality conditions of
/// `min 1/2 |w|^2 + gamma e^T s` subject to the soft-margin constraints,
/// with multipliers `(u, v)` and box multipliers `gamma - u`, `gamma - v`.
pub fn unperturbed_kkt_residual(ds: &SvmDataset, gamma: f64, p: &KktPoint) -> f64 {
    let mut worst: f64 = 0.0;
    let mut see = |x: f64| worst = worst.max(x.abs());
    let w_dual = ds.c_points.tr_mul(&p.u) - ds.d_points.tr_mul(&p.v);
    see((&p.w - w_dual).amax());
    see(p.u.sum() - p.v.sum());
    for (i, row) in ds.c_points.row_iter().enumerate() {
        let margin = row.dot(&p.w.transpose()) + p.t;
        let gap = margin - 1.0 + p.s_c[i];
        see(gap.min(0.0));
        see(p.u[i] * gap);
        see(p.s_c[i].min(0.0));
        see((gamma - p.u[i]) * p.s_c[i]);
        see(p.u[i].min(0.0));
        see((gamma - p.u[i]).min(0.0));
    }
    for (i, row) in ds.d_points.row_iter().enumerate() {
        let margin = -row.dot(&p.w.transpose()) - p.t;
        let gap = margin - 1.0 + p.s_d[i];
        see(gap.min(0.0));
        see(p.v[i] * gap);
        see(p.s_d[i].min(0.0));
        see((gamma - p.v[i]) * p.s_d[i]);
        see(p.v[i].min(0.0));
        see((gamma - p.v[i]).min(0.0));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn desk_scale_values() {
        let tc = theory_constants(0.75, 0.75, 0.05, 0.01, 300, None).unwrap();
        assert!((tc.delta - 0.428_571_428_571_428_6).abs() < 1e-12);
        assert!((tc.xi - 1.580_3).abs() < 1e-4, "{}", tc.xi);
        assert!((tc.k - 0.4949).abs() < 1e-4, "{}", tc.k);
        assert!(tc.assumption_ok);
        assert!(!tc.kbar_feasible);
        assert_eq!(tc.big_delta, None);
    }

    #[test]
    fn small_rho_nu_limits() {
        let tc = theory_constants(0.75, 0.8, 1e-9, 0.0, 300, None).unwrap();
        assert!((tc.xi - 1.0 / 3.0).abs() < 1e-8);
        assert!((tc.k - 3.0 / (128.0 * 0.75 * 0.75)).abs() < 1e-8);
        assert!(tc.kbar_feasible);
        let kb = tc.kbar.unwrap();
        assert!(kb > tc.kbar_lower && kb < 1.0);
        assert!(tc.big_delta.unwrap() > 0.0);
    }

    #[test]
    fn explicit_kbar_outside_range_has_no_delta() {
        let tc = theory_constants(1.0, 1.0, 0.001, 0.0, 100, Some(0.5)).unwrap();
        assert!(tc.kbar_feasible);
        assert_eq!(tc.big_delta, None);
    }

    #[test]
    fn invalid_models_are_rejected() {
        assert!(theory_constants(0.4, 0.75, 0.05, 0.0, 10, None).is_err());
        assert!(theory_constants(0.75, 0.75, 0.8, 0.0, 10, None).is_err());
        assert!(theory_constants(0.75, 0.75, 0.0, 0.0, 10, None).is_err());
        assert!(theory_constants(0.75, 0.75, 0.1, -1.0, 10, None).is_err());
    }

    #[test]
    fn kkt_residual_detects_violations() {
        let ds = SvmDataset::new(DMatrix::from_row_slice(1, 1, &[1.0]), DMatrix::from_row_slice(1, 1, &[-1.0])).unwrap();
        let p = KktPoint {
            u: DVector::from_element(1, 0.5),
            v: DVector::from_element(1, 0.5),
            w: DVector::from_element(1, 1.0),
            t: 0.0,
            s_c: DVector::zeros(1),
            s_d: DVector::zeros(1),
        };
        assert_eq!(unperturbed_kkt_residual(&ds, 1.0, &p), 0.0);
        let bad = KktPoint { t: 0.5, ..p.clone() };
        assert!(unperturbed_kkt_residual(&ds, 1.0, &bad) > 0.1);
    }
}
