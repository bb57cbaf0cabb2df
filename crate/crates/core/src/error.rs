use thiserror::Error;

use crate::expr::ExprError;
use crate::jet::JetError;
use crate::metric::MetricError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("fundamental tensor is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    Singular { min_eigenvalue: f64 },
    #[error("{what}: routes disagree by {residual:e} (tolerance {tolerance:e})")]
    CrossCheckFailure {
        what: &'static str,
        residual: f64,
        tolerance: f64,
    },
    #[error("flag is degenerate: u is parallel to y")]
    DegenerateFlag,
    #[error("fit undefined: {0}")]
    UndefinedFit(String),
    #[error("point is Riemannian to working precision (|I| = {norm:e})")]
    RiemannianPoint { norm: f64 },
    #[error("dimension {found} not supported here (requires {required})")]
    DimensionError { required: &'static str, found: usize },
    #[error("flag curvature is not constant (spread {spread:e})")]
    NotConstantCurvature { spread: f64 },
    #[error("curve left the chart at t = {t}")]
    ChartExit { t: f64, x: Vec<f64> },
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepFailure { t: f64, h: f64 },
    #[error("transported vector vanished at t = {t}")]
    VanishingVector { t: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
