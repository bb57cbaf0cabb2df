use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use finsler::analysis::{
    berwald_frame, fit_relative_stretch, fit_relative_stretch_points, fit_semi_c_reducible, measure_flag_constancy,
    BerwaldFrame2D, FlagConstancy, RelativeStretchFit, SemiCFit,
};
use finsler::curvature::{IdentityResiduals, PointState, Tower};
use finsler::metric::{unit_vector, MetricSpec};
use finsler::{CurvatureBundle64, Error, MetricInstance64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::output::{emit, json_string, Failure, ToolInfo, TOOL};

pub const REPORT_SCHEMA: &str = "finsler-report/1";

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome<T> {
    Ok { value: T },
    Unavailable { reason: String },
}

impl<T> Outcome<T> {
    fn from_result(r: finsler::Result<T>) -> Result<Self, Failure> {
        match r {
            Ok(value) => Ok(Outcome::Ok { value }),
            Err(
                e @ (Error::UndefinedFit(_)
                | Error::RiemannianPoint { .. }
                | Error::DimensionError { .. }
                | Error::DegenerateFlag),
            ) => Ok(Outcome::Unavailable { reason: e.to_string() }),
            Err(e) => Err(e.into()),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Tolerances {
    pub identity: f64,
    pub fit_spread: f64,
}

#[derive(Debug, Serialize)]
pub struct PointReport {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(rename = "F")]
    pub f: f64,
    pub norms: BTreeMap<&'static str, f64>,
    pub residuals: IdentityResiduals,
    pub identities_pass: bool,
    pub flag_curvature: Outcome<FlagConstancy>,
    pub semi_c: Outcome<SemiCFit>,
    pub berwald_frame: Outcome<BerwaldFrame2D>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tensors: Option<CurvatureBundle64>,
}

#[derive(Debug, Serialize)]
pub struct Fits {
    /// Fit over the points where the ratio is defined.
    pub relative_stretch: Outcome<RelativeStretchFit>,
    pub undefined_points: Vec<usize>,
}

#[derive(Debug, Serialize)]
pub struct Verdicts {
    pub identities: bool,
    pub max_identity_residual: f64,
    pub riemannian_points: usize,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub tool: ToolInfo,
    pub metric: MetricSpec,
    pub seed: Option<u64>,
    pub tolerances: Tolerances,
    pub points: Vec<PointReport>,
    pub fits: Fits,
    pub verdicts: Verdicts,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointIn {
    x: Vec<f64>,
    y: Vec<f64>,
}

pub fn read_points(path: &Path, n: usize) -> Result<Vec<(Vec<f64>, Vec<f64>)>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let pts: Vec<PointIn> =
        serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: invalid points file: {e}", path.display())))?;
    if pts.is_empty() {
        return Err(Failure::usage(format!("{}: no points", path.display())));
    }
    pts.into_iter()
        .map(|p| {
            if p.x.len() != n || p.y.len() != n {
                Err(Failure::usage(format!("points must have dimension {n}")))
            } else {
                Ok((p.x, p.y))
            }
        })
        .collect()
}

/// `count` chart points with unit directions, reproducible from `seed`.
pub fn sample_points(m: &MetricInstance64, count: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let n = m.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (m.chart().sample(n, &mut rng), unit_vector(n, &mut rng)))
        .collect()
}

pub fn check_chart(m: &MetricInstance64, pts: &[(Vec<f64>, Vec<f64>)]) -> Result<(), Failure> {
    for (x, _) in pts {
        m.check_chart(x).map_err(|e| Failure::from(Error::from(e)))?;
    }
    Ok(())
}

fn point_report(m: &MetricInstance64, p: &PointState<f64>, tol: f64, full: bool) -> Result<PointReport, Failure> {
    let bundle = Tower::build(m, p)?.bundle()?;
    let norms: BTreeMap<&'static str, f64> = bundle.norms().into_iter().collect();
    let residuals = bundle.residuals.clone();
    Ok(PointReport {
        x: p.x.clone(),
        y: p.y.clone(),
        f: bundle.f,
        norms,
        identities_pass: residuals.max() <= tol,
        residuals,
        flag_curvature: Outcome::from_result(measure_flag_constancy(m, p))?,
        semi_c: Outcome::from_result(fit_semi_c_reducible(m, p))?,
        berwald_frame: Outcome::from_result(berwald_frame(m, p))?,
        tensors: full.then_some(bundle),
    })
}

pub struct ReportArgs {
    pub points: Option<PathBuf>,
    pub samples: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub full_tensors: bool,
    pub out: Option<PathBuf>,
}

pub fn build_report(m: &MetricInstance64, args: &ReportArgs) -> Result<Report, Failure> {
    let (raw, seed) = match &args.points {
        Some(path) => (read_points(path, m.dim())?, None),
        None => (sample_points(m, args.samples.max(1), args.seed), Some(args.seed)),
    };
    check_chart(m, &raw)?;
    let states: Vec<PointState<f64>> = raw.iter().map(|(x, y)| PointState::from_f64(x, y)).collect();
    let points = states
        .iter()
        .map(|p| point_report(m, p, args.tolerances.identity, args.full_tensors))
        .collect::<Result<Vec<_>, _>>()?;

    let mut defined = Vec::new();
    let mut undefined_points = Vec::new();
    for (k, p) in states.iter().enumerate() {
        match fit_relative_stretch(m, p) {
            Ok(_) => defined.push(p.clone()),
            Err(Error::UndefinedFit(_)) => undefined_points.push(k),
            Err(e) => return Err(e.into()),
        }
    }
    let relative_stretch = if defined.is_empty() {
        Outcome::Unavailable {
            reason: "the ratio is undefined at every point (the stretch design tensor vanishes)".into(),
        }
    } else {
        Outcome::from_result(fit_relative_stretch_points(m, &defined, args.tolerances.fit_spread))?
    };

    let max_identity_residual = points.iter().fold(0.0f64, |a, p| a.max(p.residuals.max()));
    let riemannian_points = points.iter().filter(|p| p.norms["C"] * p.f <= finsler::analysis::I_FLOOR).count();
    Ok(Report {
        schema: REPORT_SCHEMA,
        tool: TOOL,
        metric: m.spec().clone(),
        seed,
        tolerances: args.tolerances,
        verdicts: Verdicts {
            identities: points.iter().all(|p| p.identities_pass),
            max_identity_residual,
            riemannian_points,
        },
        points,
        fits: Fits {
            relative_stretch,
            undefined_points,
        },
    })
}

pub fn cmd_report(m: &MetricInstance64, args: &ReportArgs) -> Result<i32, Failure> {
    let report = build_report(m, args)?;
    emit(args.out.as_deref(), &json_string(&report)?)?;
    Ok(crate::output::EXIT_OK)
}
