//! Numerical Finsler geometry on the punctured tangent bundle.
//!
//! The crate evaluates the spray-derived curvature tower of a Finsler metric
//! (fundamental tensor, Cartan torsion, Berwald, Riemann, Landsberg and
//! stretch curvatures, flag curvature) at arbitrary points `(x, y)` using
//! truncated Taylor jets, fits the scalar ratios that classify relative
//! stretch and semi-C-reducible metrics, and integrates geodesics and
//! parallel transport along the spray.

pub mod analysis;
pub mod curvature;
pub mod error;
pub mod expr;
pub mod jet;
pub mod linalg;
pub mod metric;
pub mod scalar;
pub mod tensor;
pub mod transport;

pub use error::{Error, Result};
pub use scalar::{Real, Scalar};

/// Double precision jet.
pub type Jet64 = jet::Jet<f64>;
pub type MetricInstance64 = metric::MetricInstance<f64>;
pub type MetricInstance32 = metric::MetricInstance<f32>;
pub type PointState64 = curvature::PointState<f64>;
pub type CurvatureBundle64 = curvature::CurvatureBundle<f64>;
pub type Tower64 = curvature::Tower<f64>;
