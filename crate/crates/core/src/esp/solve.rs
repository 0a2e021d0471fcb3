use std::time::Instant;

use nalgebra::DVector;

use super::{candidate_separator, residual, residual_vector, EspInstance, EspResidual, SeparatorModel, SeparatorVerdict};
use crate::error::Result;
use crate::fista::{self, Control, SmoothProblem, SolveOptions, SolveReport, StopReason, Variant};
use crate::linalg::LinearOperator;
use crate::projection::project_product_cone_flat;

/// `1/2 |A x - b|^2` over the product of second-order cones.
pub struct EspProblem<'a> {
    pub instance: &'a EspInstance,
}

impl SmoothProblem for EspProblem<'_> {
    fn dim(&self) -> usize {
        self.instance.n_vars()
    }

    fn gradient(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        let r = -residual_vector(self.instance, x);
        self.instance.apply_transpose(&r, out);
    }

    fn lipschitz(&self) -> f64 {
        self.instance.lipschitz
    }

    fn project(&self, x: &mut DVector<f64>) {
        project_product_cone_flat(x.as_mut_slice(), self.instance.block_len());
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EspMode {
    /// Stop at the first iterate whose candidate hyperplane verifies.
    EarlyStop,
    /// Stop once the projected step from the auxiliary point is at most the
    /// tolerance, then test the final candidate.
    Tolerance(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum EspOutcome {
    Separator(SeparatorModel),
    NoSeparatorFound,
}

impl EspOutcome {
    pub fn separator(&self) -> Option<&SeparatorModel> {
        match self {
            EspOutcome::Separator(m) => Some(m),
            EspOutcome::NoSeparatorFound => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EspTraceRow {
    pub iteration: usize,
    pub f_value: f64,
    pub residual_norm: f64,
    pub separator_found: bool,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct EspRun {
    pub outcome: EspOutcome,
    pub report: SolveReport,
    pub trace: Vec<EspTraceRow>,
    /// Final iterate and its residual.
    pub x: DVector<f64>,
    pub residual: EspResidual,
}

/// Runs FISTA from `x0 = 0`, evaluating the candidate separator of every iterate.
pub fn solve_esp(inst: &EspInstance, mode: EspMode, max_iter: usize) -> Result<EspRun> {
    let prob = EspProblem { instance: inst };
    let start = Instant::now();
    let mut trace = Vec::new();
    let mut found: Option<SeparatorModel> = None;
    let mut last: Option<(EspResidual, SeparatorVerdict)> = None;

    let observer = |s: &fista::FistaState| {
        let r = residual(inst, &s.x);
        let (w, m) = candidate_separator(&r);
        let verdict = super::verify_separator(inst, &w, m);
        let separates = verdict != SeparatorVerdict::NotSeparating;
        trace.push(EspTraceRow {
            iteration: s.k,
            f_value: 0.5 * r.norm_squared(),
            residual_norm: r.norm,
            separator_found: separates,
            elapsed_seconds: start.elapsed().as_secs_f64(),
        });
        let control = match mode {
            EspMode::EarlyStop if separates => {
                found = SeparatorModel::verified(inst, w, m, s.k);
                Control::Stop(StopReason::EarlyStopped)
            }
            EspMode::Tolerance(tol) if s.grad_map_norm <= tol => Control::Stop(StopReason::ToleranceReached),
            _ => Control::Continue,
        };
        last = Some((r, verdict));
        control
    };
    let (report, state) = fista::solve(&prob, DVector::zeros(inst.n_vars()), SolveOptions::new(max_iter, Variant::Convex), observer)?;
    let (res, verdict) = last.expect("at least one iteration ran");
    if matches!(mode, EspMode::Tolerance(_)) && verdict != SeparatorVerdict::NotSeparating {
        let (w, m) = candidate_separator(&res);
        found = SeparatorModel::verified(inst, w, m, report.iterations);
    }
    let outcome = found.map_or(EspOutcome::NoSeparatorFound, EspOutcome::Separator);
    Ok(EspRun {
        outcome,
        report,
        trace,
        x: state.x,
        residual: res,
    })
}

/// High-accuracy FISTA solution used as the limit in diagnostics.
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub x: DVector<f64>,
    pub residual: EspResidual,
    pub f_value: f64,
    pub iterations: usize,
}

/// Runs FISTA for `max_iter` iterations or until the projected step from the
/// auxiliary point drops below `step_tol` (defaults used in diagnostics:
/// `100_000` and `1e-10`).
pub fn reference_solution(inst: &EspInstance, max_iter: usize, step_tol: f64) -> Result<ReferenceSolution> {
    let prob = EspProblem { instance: inst };
    let (report, state) = fista::solve(&prob, DVector::zeros(inst.n_vars()), SolveOptions::new(max_iter, Variant::Convex), |s| {
        if s.grad_map_norm < step_tol {
            Control::Stop(StopReason::ToleranceReached)
        } else {
            Control::Continue
        }
    })?;
    let residual = residual(inst, &state.x);
    Ok(ReferenceSolution {
        f_value: 0.5 * residual.norm_squared(),
        residual,
        x: state.x,
        iterations: report.iterations,
    })
}
