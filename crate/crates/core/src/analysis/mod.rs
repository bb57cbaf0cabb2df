//! Classification, scalar fits and numerical checks of the structural
//! identities of relative stretch metrics.

mod classify;
mod fits;
mod frame;
mod theorems;


use serde::Serialize;

use crate::curvature::{jsum, JetGeometry};
use crate::error::Result;
use crate::jet::Jet;
use crate::scalar::Real;
use crate::tensor::{JetTensor, Tensor};

pub use classify::{classify, ChainCheck, ClassificationVerdict, FlagVerdict, Thresholds};
pub use fits::{
    fit_relative_stretch, fit_relative_stretch_points, fit_semi_c_reducible, semi_c_parts, stretch_ratio,
    survey_relative_stretch, PointFit, RelativeStretchFit, RelativeStretchSurvey, SemiCFit, SemiCParts, SignLabel,
    DESIGN_FLOOR, I_FLOOR, SPREAD_TOL,
};
pub use frame::{berwald_frame, BerwaldFrame2D};
pub(crate) use fits::{relative_stretch_jet, semi_c_at};
pub(crate) use frame::{frame_jets, mu_jet};
pub use theorems::{
    check_characteristic_constancy, check_constant_flag_chain, check_corollary_condition, check_theorem3_condition,
    measure_flag_constancy, FlagConstancy,
};

/// Default tolerance for theorem-level checks.
pub const CHECK_TOL: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Both sides vanish because the metric is Riemannian where sampled.
    Vacuous,
    /// The identity holds only because every factor in it vanishes.
    Degenerate,
    /// A prerequisite (such as a fitted ratio) was unavailable.
    Skipped,
}

impl Verdict {
    pub fn from_residual(residual: f64, tol: f64) -> Self {
        if residual <= tol {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Combines per-point or per-part verdicts: any failure fails, otherwise
    /// any pass passes.
    pub fn combine(vs: impl IntoIterator<Item = Verdict>) -> Verdict {
        let vs: Vec<Verdict> = vs.into_iter().collect();
        for v in [Verdict::Fail, Verdict::Pass, Verdict::Degenerate, Verdict::Vacuous] {
            if vs.contains(&v) {
                return v;
            }
        }
        Verdict::Skipped
    }

    pub fn is_ok(self) -> bool {
        self != Verdict::Fail
    }
}

/// Values recorded at one point (or sample time) of a check.
#[derive(Clone, Debug, Serialize)]
pub struct CheckPoint {
    pub t: Option<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub values: Vec<(String, f64)>,
    pub residual: f64,
    pub verdict: Verdict,
    /// Why the point was not checked, if it was not.
    pub note: Option<String>,
}

impl CheckPoint {
    pub fn value(&self, key: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremCheckResult {
    pub id: String,
    pub points: Vec<CheckPoint>,
    /// Largest residual over the checked points.
    pub residual: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    /// Sub-identities, for checks made of several.
    pub parts: Vec<TheoremCheckResult>,
}

impl TheoremCheckResult {
    pub(crate) fn from_points(id: &str, points: Vec<CheckPoint>, tolerance: f64) -> Self {
        let residual = points
            .iter()
            .filter(|p| matches!(p.verdict, Verdict::Pass | Verdict::Fail))
            .fold(0.0f64, |m, p| m.max(p.residual));
        let verdict = Verdict::combine(points.iter().map(|p| p.verdict));
        TheoremCheckResult {
            id: id.to_string(),
            points,
            residual,
            tolerance,
            verdict,
            parts: Vec::new(),
        }
    }

    pub(crate) fn from_parts(id: &str, parts: Vec<TheoremCheckResult>, tolerance: f64) -> Self {
        let residual = parts
            .iter()
            .filter(|p| matches!(p.verdict, Verdict::Pass | Verdict::Fail))
            .fold(0.0f64, |m, p| m.max(p.residual));
        TheoremCheckResult {
            id: id.to_string(),
            points: Vec::new(),
            residual,
            tolerance,
            verdict: Verdict::combine(parts.iter().map(|p| p.verdict)),
            parts,
        }
    }

    pub fn part(&self, id: &str) -> Option<&TheoremCheckResult> {
        self.parts.iter().find(|p| p.id == id)
    }
}

/// `Σ a_I b_I` over all components.
pub(crate) fn contract_all<T: Real>(a: &JetTensor<T>, b: &JetTensor<T>) -> Jet<T> {
    jsum(a.data().iter().zip(b.data()).map(|(p, q)| p * q))
}

/// `s_{|m} yᵐ` for a scalar jet `s`.
pub(crate) fn h_dot<T: Real>(geo: &JetGeometry<T>, s: &Jet<T>) -> Result<Jet<T>> {
    let t = Tensor::from_fn(geo.n, &[], |_| s.clone());
    let d = geo.horizontal(&t)?;
    Ok(geo.contract_y(&d).data()[0].clone())
}
