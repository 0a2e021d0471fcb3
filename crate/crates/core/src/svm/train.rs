use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dual::{dual_objective, extract_w, proximity_bound, DualProblem};
use super::{psi_prime, ClassificationTracker, DualPoint, SvmDataset, SvmHyperparams};
use crate::error::{Error, Result};
use crate::fista::{self, Control, SolveOptions, SolveReport, StopReason, Variant};

/// Hyperplane `w^T x + t` in the coordinates of the original features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub w: Vec<f64>,
    pub t: f64,
    /// Feature scaling applied during training (already folded into `w`).
    pub scale: f64,
    #[serde(rename = "iteration")]
    pub found_at_iteration: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmTraceRow {
    pub iteration: usize,
    pub projected_step_norm: f64,
    pub delta: f64,
    pub p_properly_classified: f64,
    pub g_value: f64,
}

#[derive(Debug, Clone)]
pub struct SvmTrainRun {
    pub model: SvmModel,
    pub report: SolveReport,
    pub tracker: ClassificationTracker,
    pub trace: Vec<SvmTraceRow>,
    /// Final dual iterate.
    pub dual: DualPoint,
    pub hyperparams: SvmHyperparams,
}

/// Trains with the default hyperparameters for `ds`.
pub fn train(ds: &SvmDataset, delta_min: f64, max_iter: usize) -> Result<SvmTrainRun> {
    train_with(ds, &SvmHyperparams::for_dataset(ds), delta_min, max_iter)
}

/// Strongly convex FISTA on the perturbed dual from `(0, 0)`. After every
/// iteration the proximity bound certifies properly classified points; the
/// run ends when that set stalls. The hyperplane is `w = C^T u - D^T v` with
/// the intercept chosen by bisection.
pub fn train_with(ds: &SvmDataset, hp: &SvmHyperparams, delta_min: f64, max_iter: usize) -> Result<SvmTrainRun> {
    let prob = DualProblem {
        dataset: ds,
        hyperparams: *hp,
    };
    let j = ds.j();
    let mut tracker = ClassificationTracker::new(ds.n(), delta_min);
    let mut trace = Vec::new();
    let observer = |s: &fista::FistaState| {
        let p = DualPoint::from_flat(&s.prev_y, j);
        let p_plus = DualPoint::from_flat(&s.x, j);
        let delta = proximity_bound(&p, &p_plus, hp);
        let stop = tracker.update(&p_plus, delta, hp.gamma);
        trace.push(SvmTraceRow {
            iteration: s.k,
            projected_step_norm: s.grad_map_norm,
            delta,
            p_properly_classified: tracker.fraction(),
            g_value: dual_objective(ds, hp, &p_plus),
        });
        if stop {
            Control::Stop(StopReason::EarlyStopped)
        } else {
            Control::Continue
        }
    };
    let (report, state) = fista::solve(&prob, DVector::zeros(ds.n()), SolveOptions::new(max_iter, Variant::StronglyConvex), observer)?;
    let dual = DualPoint::from_flat(&state.x, j);
    let w = extract_w(ds, &dual);
    let t = intercept_bisection(ds, hp, &w, 1e-12)?;
    let model = SvmModel {
        w: (&w * ds.scale).as_slice().to_vec(),
        t,
        scale: ds.scale,
        found_at_iteration: report.iterations,
    };
    Ok(SvmTrainRun {
        model,
        report,
        tracker,
        trace,
        dual,
        hyperparams: *hp,
    })
}

/// Minimizer over `t` of `sum psi(c_i^T w + t) + sum psi(-d_i^T w - t)`,
/// found by bisection on its nondecreasing derivative. When the derivative
/// vanishes on an interval, the midpoint of that interval is returned.
pub fn intercept_bisection(ds: &SvmDataset, hp: &SvmHyperparams, w: &DVector<f64>, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let cw = &ds.c_points * w;
    let dw = &ds.d_points * w;
    let h = |t: f64| -> f64 {
        cw.iter().map(|&m| psi_prime(m + t, hp)).sum::<f64>() - dw.iter().map(|&m| psi_prime(-m - t, hp)).sum::<f64>()
    };
    let mut half = 1.0 + ds.radius * w.norm();
    let mut doublings = 0;
    while !(h(-half) < 0.0 && h(half) > 0.0) {
        doublings += 1;
        if doublings > 60 || !half.is_finite() {
            return Err(Error::BracketFailure { doublings });
        }
        half *= 2.0;
    }
    // last t with h(t) < 0, and first t with h(t) > 0
    let lower_edge = bisect(-half, half, tol, |t| h(t) < 0.0);
    let upper_edge = bisect(-half, half, tol, |t| h(t) <= 0.0);
    Ok(0.5 * (lower_edge + upper_edge))
}

/// Boundary of a predicate that holds at `lo`, fails at `hi`, and switches once.
fn bisect(mut lo: f64, mut hi: f64, tol: f64, holds: impl Fn(f64) -> bool) -> f64 {
    while hi - lo >= tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `sign(w^T x + t)` per row, with `sign(0) = +1`.
pub fn predict(model: &SvmModel, points: &DMatrix<f64>) -> Result<Vec<i8>> {
    if points.ncols() != model.w.len() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} features, data has {}",
            model.w.len(),
            points.ncols()
        )));
    }
    let w = DVector::from_column_slice(&model.w);
    Ok((points * w).iter().map(|&s| if s + model.t >= 0.0 { 1 } else { -1 }).collect())
}

/// Fraction of matching labels.
pub fn accuracy(predicted: &[i8], truth: &[i8]) -> f64 {
    assert_eq!(predicted.len(), truth.len());
    if truth.is_empty() {
        return 0.0;
    }
    predicted.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}

pub fn write_model(path: &Path, model: &SvmModel) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(model)? + "\n")?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<SvmModel> {
    let model: SvmModel = serde_json::from_str(&fs::read_to_string(path)?)?;
    if !model.t.is_finite() || model.w.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("model {} has non-finite entries", path.display())));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::psi;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blobs(n_each: usize, seed: u64) -> SvmDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = DMatrix::from_fn(n_each, 2, |_, k| if k == 0 { 0.6 } else { 0.0 } + 0.3 * (rng.random::<f64>() - 0.5));
        let d = DMatrix::from_fn(n_each, 2, |_, k| if k == 0 { -0.6 } else { 0.0 } + 0.3 * (rng.random::<f64>() - 0.5));
        SvmDataset::new(c, d).unwrap()
    }

    #[test]
    fn mirror_symmetric_data_gives_zero_intercept() {
        let c = DMatrix::from_row_slice(3, 2, &[0.5, 0.1, 0.2, -0.4, 0.9, 0.3]);
        let ds = SvmDataset::new(c.clone(), -c).unwrap();
        let hp = SvmHyperparams::for_dataset(&ds);
        for w in [[1.0, 0.0], [0.3, -2.0], [0.0, 0.0]] {
            let t = intercept_bisection(&ds, &hp, &DVector::from_column_slice(&w), 1e-12).unwrap();
            assert!(t.abs() < 1e-11, "{t}");
        }
    }

    #[test]
    fn flat_region_returns_its_midpoint() {
        // margins c^T w = 3 and -d^T w = 5 exceed 1 for t in [-2, 4]
        let ds = SvmDataset::new(DMatrix::from_row_slice(1, 1, &[3.0]), DMatrix::from_row_slice(1, 1, &[-5.0])).unwrap();
        let hp = SvmHyperparams::for_dataset(&ds);
        let t = intercept_bisection(&ds, &hp, &DVector::from_element(1, 1.0), 1e-12).unwrap();
        assert!((t - 1.0).abs() < 1e-10, "{t}");
    }

    #[test]
    fn intercept_matches_golden_section() {
        let ds = blobs(6, 3);
        let hp = SvmHyperparams::for_dataset(&ds);
        let w = DVector::from_column_slice(&[1.7, 0.4]);
        let f = |t: f64| {
            (&ds.c_points * &w).iter().map(|&m| psi(m + t, &hp)).sum::<f64>()
                + (&ds.d_points * &w).iter().map(|&m| psi(-m - t, &hp)).sum::<f64>()
        };
        let (mut a, mut b) = (-5.0f64, 5.0f64);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        while b - a > 1e-11 {
            let (x1, x2) = (b - g * (b - a), a + g * (b - a));
            if f(x1) < f(x2) {
                b = x2;
            } else {
                a = x1;
            }
        }
        let t = intercept_bisection(&ds, &hp, &w, 1e-12).unwrap();
        assert!((t - 0.5 * (a + b)).abs() < 1e-8, "{t} vs {}", 0.5 * (a + b));
    }

    #[test]
    fn nonfinite_weights_fail_to_bracket() {
        let ds = blobs(2, 1);
        let hp = SvmHyperparams::for_dataset(&ds);
        let w = DVector::from_column_slice(&[f64::NAN, 0.0]);
        assert!(matches!(intercept_bisection(&ds, &hp, &w, 1e-9), Err(Error::BracketFailure { .. })));
    }

    #[test]
    fn training_separates_blobs() {
        let ds = blobs(40, 7);
        let run = train(&ds, 1e-4, 10_000).unwrap();
        assert_eq!(run.report.stop_reason, StopReason::EarlyStopped);
        assert!(run.dual.in_omega(run.hyperparams.gamma));
        let pc = predict(&run.model, &ds.c_points).unwrap();
        let pd = predict(&run.model, &ds.d_points).unwrap();
        assert!(pc.iter().all(|&y| y == 1) && pd.iter().all(|&y| y == -1));
        assert_eq!(run.trace.len(), run.report.iterations);
        assert!(run.trace.windows(2).all(|w| w[0].p_properly_classified <= w[1].p_properly_classified));
    }

    #[test]
    fn unattainable_delta_min_stops_right_after_arming() {
        let ds = blobs(20, 9);
        let run = train(&ds, 1.0, 10_000).unwrap();
        assert_eq!(run.tracker.stale, 2);
        let armed = run.trace.iter().position(|r| r.p_properly_classified > 0.0).unwrap();
        assert_eq!(run.report.iterations, run.trace[armed].iteration + 1);
    }

    #[test]
    fn predict_sign_convention() {
        let m = SvmModel {
            w: vec![1.0, 0.0],
            t: 0.0,
            scale: 1.0,
            found_at_iteration: 0,
        };
        let pts = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 0.0, 1.0, -2.0, 0.0]);
        assert_eq!(predict(&m, &pts).unwrap(), vec![1, 1, -1]);
        let m = SvmModel { w: vec![0.0, 0.0], t: -1.0, ..m };
        assert_eq!(predict(&m, &pts).unwrap(), vec![-1, -1, -1]);
        assert!(predict(&m, &DMatrix::zeros(1, 3)).is_err());
        assert_eq!(accuracy(&[1, -1, 1], &[1, -1, 1]), 1.0);
        assert!((accuracy(&[1, 1, 1], &[1, -1, 1]) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn model_is_reported_in_original_coordinates() {
        let ds = blobs(15, 2);
        let scaled = ds.scaled_to_unit_radius().unwrap();
        let run = train(&scaled, 1e-4, 10_000).unwrap();
        let s_c = predict(&run.model, &ds.c_points).unwrap();
        let u_w = DVector::from_column_slice(&run.model.w) / scaled.scale;
        let direct: Vec<i8> = (&scaled.c_points * u_w).iter().map(|&x| if x + run.model.t >= 0.0 { 1 } else { -1 }).collect();
        assert_eq!(s_c, direct);
    }
}
