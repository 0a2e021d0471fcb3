//! Projected FISTA with constant step `1/L`, in the standard convex form and
//! the strongly convex form with fixed momentum.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{all_finite, LinearOperator};

/// A smooth objective over a closed convex set, minimized by the engine.
pub trait SmoothProblem {
    fn dim(&self) -> usize;
    /// `out = grad f(x)`
    fn gradient(&self, x: &DVector<f64>, out: &mut DVector<f64>);
    /// An upper bound on the Lipschitz constant of the gradient.
    fn lipschitz(&self) -> f64;
    fn strong_convexity(&self) -> f64 {
        0.0
    }
    /// In-place Euclidean projection onto the feasible set.
    fn project(&self, x: &mut DVector<f64>);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Convex,
    StronglyConvex,
}

#[derive(Debug, Clone)]
pub struct FistaState {
    /// Main iterate `x_k`.
    pub x: DVector<f64>,
    /// Auxiliary (extrapolated) iterate `y_k`.
    pub y: DVector<f64>,
    /// Momentum scalar, only advanced by the convex variant.
    pub t: f64,
    pub k: usize,
    /// `|x_{k+1} - x_k|` for the most recent step.
    pub last_step_norm: f64,
    /// `|y_k - x_{k+1}|`, the projected gradient step taken from the
    /// auxiliary point in the most recent step.
    pub grad_map_norm: f64,
    /// The auxiliary point the most recent step started from.
    pub prev_y: DVector<f64>,
    grad: DVector<f64>,
}

impl FistaState {
    pub fn new(x0: DVector<f64>) -> Self {
        let n = x0.len();
        Self {
            y: x0.clone(),
            prev_y: x0.clone(),
            x: x0,
            t: 1.0,
            k: 0,
            last_step_norm: 0.0,
            grad_map_norm: 0.0,
            grad: DVector::zeros(n),
        }
    }

    fn advance<P: SmoothProblem + ?Sized>(&mut self, prob: &P, momentum: f64) -> Result<()> {
        let step = 1.0 / prob.lipschitz();
        prob.gradient(&self.y, &mut self.grad);
        let mut x_next = &self.y - &self.grad * step;
        prob.project(&mut x_next);
        if !all_finite(&x_next) {
            return Err(Error::NonFiniteIterate { iteration: self.k + 1 });
        }
        self.grad_map_norm = (&self.y - &x_next).norm();
        let diff = &x_next - &self.x;
        self.last_step_norm = diff.norm();
        std::mem::swap(&mut self.prev_y, &mut self.y);
        self.y = &x_next + diff * momentum;
        self.x = x_next;
        self.k += 1;
        Ok(())
    }
}

/// Next value of the convex-variant momentum scalar.
pub fn next_momentum_scalar(t: f64) -> f64 {
    0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
}

/// Constant extrapolation weight `(sqrt(kappa) - 1) / (sqrt(kappa) + 1)`.
pub fn strongly_convex_momentum(kappa: f64) -> f64 {
    let r = kappa.sqrt();
    (r - 1.0) / (r + 1.0)
}

pub fn fista_step_convex<P: SmoothProblem + ?Sized>(state: &mut FistaState, prob: &P) -> Result<()> {
    debug_assert!(state.t >= 1.0);
    let t_next = next_momentum_scalar(state.t);
    let momentum = (state.t - 1.0) / t_next;
    state.advance(prob, momentum)?;
    state.t = t_next;
    Ok(())
}

pub fn fista_step_strongly_convex<P: SmoothProblem + ?Sized>(state: &mut FistaState, prob: &P) -> Result<()> {
    let mu = prob.strong_convexity();
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "strongly convex step needs a positive modulus, got {mu}"
        )));
    }
    state.advance(prob, strongly_convex_momentum(prob.lipschitz() / mu))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    EarlyStopped,
    ToleranceReached,
    MaxIterations,
}

/// Observer verdict after each completed iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop(StopReason),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub stop_reason: StopReason,
    /// Per-iteration projected-step norms `|y_k - x_{k+1}|` when requested.
    pub trace: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub max_iter: usize,
    pub variant: Variant,
    pub record_trace: bool,
}

impl SolveOptions {
    pub fn new(max_iter: usize, variant: Variant) -> Self {
        Self {
            max_iter,
            variant,
            record_trace: false,
        }
    }
}

/// Runs FISTA from `x0`, handing every completed iterate to `observer`.
///
/// Returns the final state alongside the report.
pub fn solve<P, F>(prob: &P, x0: DVector<f64>, opts: SolveOptions, mut observer: F) -> Result<(SolveReport, FistaState)>
where
    P: SmoothProblem + ?Sized,
    F: FnMut(&FistaState) -> Control,
{
    if opts.max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    if x0.len() != prob.dim() {
        return Err(Error::DimensionMismatch(format!(
            "start point has length {}, problem dimension is {}",
            x0.len(),
            prob.dim()
        )));
    }
    let mut state = FistaState::new(x0);
    let mut trace = opts.record_trace.then(Vec::new);
    let mut stop_reason = StopReason::MaxIterations;
    while state.k < opts.max_iter {
        match opts.variant {
            Variant::Convex => fista_step_convex(&mut state, prob)?,
            Variant::StronglyConvex => fista_step_strongly_convex(&mut state, prob)?,
        }
        if cfg!(debug_assertions) && state.k == 1 {
            let mut again = state.x.clone();
            prob.project(&mut again);
            let scale = 1.0 + state.x.norm();
            debug_assert!((again - &state.x).norm() <= 1e-12 * scale, "projector is not idempotent");
        }
        if let Some(trace) = trace.as_mut() {
            trace.push(state.grad_map_norm);
        }
        if let Control::Stop(reason) = observer(&state) {
            stop_reason = reason;
            break;
        }
    }
    let report = SolveReport {
        iterations: state.k,
        stop_reason,
        trace,
    };
    Ok((report, state))
}

/// Largest singular value of `op` by power iteration on `op^T op`, started
/// from a fixed-seed random vector. Stops once the Rayleigh quotient changes
/// by at most `tol` relative.
pub fn spectral_norm<O: LinearOperator + ?Sized>(op: &O, tol: f64, max_iter: usize) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let n = op.ncols();
    if n == 0 || op.nrows() == 0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
    v /= v.norm();
    let mut av = DVector::zeros(op.nrows());
    let mut z = DVector::zeros(n);
    let mut rayleigh = 0.0;
    for _ in 0..max_iter {
        op.apply(&v, &mut av);
        let next = av.norm_squared();
        op.apply_transpose(&av, &mut z);
        let zn = z.norm();
        if zn == 0.0 {
            return Ok(0.0);
        }
        if (next - rayleigh).abs() <= tol * next {
            return Ok(next.sqrt());
        }
        rayleigh = next;
        v.copy_from(&z);
        v /= zn;
    }
    Err(Error::NoConvergence { max_iter })
}

/// Step-size constant for `1/2 |A x - b|^2`: squared spectral norm at
/// tolerance 1e-6, inflated by 1%.
pub fn lipschitz_of_least_squares<O: LinearOperator + ?Sized>(op: &O) -> Result<f64> {
    let s = spectral_norm(op, 1e-6, 100_000)?;
    Ok(1.01 * s * s)
}
