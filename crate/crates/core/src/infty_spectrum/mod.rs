//! Limit spectral quantities of the Robin infinity-Laplacian.

mod cone;
mod eigen;
mod field;
mod pair;
mod path;
mod viscosity;

use thiserror::Error;

use crate::geometry::GeometryError;

pub use cone::{cone_boundary_sup, cone_value, Cone, ConeTrace};
pub use eigen::{
    closed_form_square, closed_form_stadium, lambda1_infty, mixed_lambda_infty, regime_report, MixedEigenvalue,
    Regime, RegimeReport, StadiumValue,
};
pub use field::{DistanceProfile, Field, Jet};
pub use pair::{
    lambda2_infty, pair_objective, r2, s_omega, ActiveConstraint, SOmegaResult, TwoBallRadius, TOL_OPT_REL,
};
pub use path::{
    build_minmax_path, first_eigenfunction_profile, path_functional_sup, FirstProfile, MinmaxPath, PathFunction,
    PathSup, TOL_PATH,
};
pub use viscosity::{
    eval_f_operator, eval_g_operator, viscosity_spot_check, Branch, Candidate, Excursion, OperatorSample,
    SpotCheckOptions, SpotCheckReport,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InftyError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("Robin parameter must be positive and finite, got {0}")]
    InvalidBeta(f64),
    #[error("cone apex lies outside the domain")]
    ApexOutside,
    #[error("pair optimization stalled at s = {}", .0.s)]
    OptimizationStalled(Box<SOmegaResult>),
    #[error("no stadium with cap radius {r} and length {d}")]
    InvalidStadium { r: f64, d: f64 },
    #[error("normal vector has length {0}, expected 1")]
    NonUnitNormal(f64),
    #[error("path function {index} has sup norm {norm}, outside [1 - tol, 1]")]
    PathOffSphere { index: usize, norm: f64 },
    #[error("path has no functions")]
    EmptyPath,
}
