//! Finite-p Robin p-Laplacian eigenvalues on P1 triangle meshes.

mod linear;
mod mesh;
mod quadrature;
mod quotient;
mod solver;
mod study;

use thiserror::Error;

use crate::infty_spectrum::InftyError;

pub use linear::{assemble, solve_p2_reference, Assembled};
pub use mesh::{triangulate, Mesh, MeshQuality};
pub use quadrature::{composite_triangle_rule, line_rule, triangle_rule, TriPoint};
pub use quotient::{rayleigh_quotient_p, DiscreteField, LogParts, PQuotient, QuotientParts};
pub use solver::{solver_tolerance, SolverOptions, Workspace};
pub use study::{
    cone_pair_field, cone_span_upper_bound, convergence_study, dlg_lower_bound, minimize_first, minimize_second, SecondOptions,
    SecondResult, SecondStart, StudyRow,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenLabel {
    First,
    Second,
}

/// A computed eigenvalue with its field and solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub p: f64,
    pub beta: f64,
    pub lambda: f64,
    /// `lambda^(1/p)`.
    pub lambda_root: f64,
    pub field: DiscreteField,
    pub iterations: usize,
    /// Quotient decrease over the last sweep (log scale).
    pub residual: f64,
    pub label: EigenLabel,
    pub h: f64,
    /// Log-quotient after each accepted step.
    pub history: Vec<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("mesh generation failed: {0}")]
    MeshFailure(String),
    #[error("exponent p = {0} must be at least 2")]
    InvalidExponent(f64),
    #[error("Robin parameter must be positive and finite, got {0}")]
    InvalidBeta(f64),
    #[error("field has {got} values for {expected} nodes")]
    FieldLength { expected: usize, got: usize },
    #[error("field is identically zero")]
    ZeroField,
    #[error("field has non-finite values")]
    NonFiniteField,
    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),
    #[error("no convergence after {} iterations at p = {} (lambda^(1/p) = {})", .0.iterations, .0.p, .0.lambda_root)]
    NonConvergence(Box<EigenResult>),
    #[error("iterate lost its sign change")]
    DegenerateSign,
    #[error(transparent)]
    Infty(#[from] InftyError),
}
