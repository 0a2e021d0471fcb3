//! Early-stopped FISTA for two binary classification problems.
//!
//! * Ellipsoid separation ([`esp`]): FISTA on the dual second-order cone
//!   program, with the residual `b - A x_k` tested every iteration for a
//!   strictly separating hyperplane.
//! * Soft-margin SVM ([`svm`]): strongly convex FISTA on a perturbed dual,
//!   with a certified proximity bound used to track properly classified
//!   points and stop once that set stalls.
//!
//! [`projection`] and [`fista`] hold the shared numerical machinery,
//! [`pdhg`] a reference primal-dual iterator used for diagnostics, and
//! [`datagen`] the synthetic and image-derived instance generators.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datagen;
pub mod error;
pub mod esp;
pub mod fista;
pub mod linalg;
pub mod pdhg;
pub mod projection;
pub mod svm;

pub use error::{Error, Result};
pub use esp::{
    Ellipsoid, EspInstance, EspMode, EspOutcome, EspResidual, Label, SeparatorModel,
    SeparatorVerdict, ShapeMatrix,
};
pub use fista::{Control, FistaState, SmoothProblem, SolveOptions, SolveReport, StopReason, Variant};
pub use projection::{KnapsackMethod, KnapsackProblem, KnapsackSolution, ProductConePoint, SocPoint};
pub use svm::{
    ClassificationTracker, DualPoint, SvmDataset, SvmHyperparams, SvmModel, TheoryConstants,
};
