use std::fmt;
use std::path::PathBuf;

use clap::ValueEnum;
use finsler::analysis::{
    check_constant_flag_chain, check_theorem3_condition, fit_relative_stretch, Verdict,
};
use finsler::curvature::{PointState, Tower};
use finsler::metric::validate_points;
use finsler::transport::{scalar_flows, FlowQuantity, GeodesicSolution};
use finsler::{Error, MetricInstance64};

use crate::geodesic::geodesic;
use crate::output::{cell, csv_string, emit, Failure, EXIT_FAILED, EXIT_OK};
use crate::report::{check_chart, sample_points};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Identities,
    Bianchi,
    LandsbergRoutes,
    ConstantFlag,
    Theorem3,
    Flows,
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_possible_value().expect("no skipped variants").get_name())
    }
}

#[derive(Clone, Debug)]
pub struct CheckRow {
    pub check: String,
    pub point: usize,
    pub t: Option<f64>,
    pub residual: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub detail: String,
}

impl CheckRow {
    fn new(check: &str, point: usize, residual: f64, tol: f64) -> Self {
        CheckRow {
            check: check.into(),
            point,
            t: None,
            residual,
            tolerance: tol,
            verdict: if residual.is_nan() {
                Verdict::Fail
            } else {
                Verdict::from_residual(residual, tol)
            },
            detail: String::new(),
        }
    }
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::Vacuous => "vacuous",
        Verdict::Degenerate => "degenerate",
        Verdict::Skipped => "skipped",
    }
}

pub struct VerifyArgs {
    pub suite: Suite,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub x0: Option<Vec<f64>>,
    pub y0: Option<Vec<f64>>,
    pub t_end: f64,
    pub steps: usize,
    pub c: Option<f64>,
    pub flows: Vec<FlowQuantity>,
    pub out: Option<PathBuf>,
}

fn point_rows(
    m: &MetricInstance64,
    a: &VerifyArgs,
    mut per_point: impl FnMut(usize, &PointState<f64>) -> Result<Vec<CheckRow>, Failure>,
) -> Result<Vec<CheckRow>, Failure> {
    let pts = sample_points(m, a.samples.max(1), a.seed);
    check_chart(m, &pts)?;
    let mut rows = Vec::new();
    for (k, (x, y)) in pts.iter().enumerate() {
        rows.extend(per_point(k, &PointState::from_f64(x, y))?);
    }
    Ok(rows)
}

fn identity_rows(m: &MetricInstance64, a: &VerifyArgs, names: &[&str]) -> Result<Vec<CheckRow>, Failure> {
    point_rows(m, a, |k, p| {
        let r = Tower::build(m, p)?.identities()?;
        let pick = |name: &str| match name {
            "landsberg_routes" => r.landsberg_routes,
            "mean_landsberg_routes" => r.mean_landsberg_routes,
            "stretch_routes" => r.stretch_routes,
            "bianchi_first" => r.bianchi_first,
            "bianchi_second" => r.bianchi_second,
            "metric_horizontal" => r.metric_horizontal,
            "metric_vertical" => r.metric_vertical,
            "f_horizontal" => r.f_horizontal,
            "y_horizontal" => r.y_horizontal,
            "stretch_antisymmetry" => r.stretch_antisymmetry,
            _ => unreachable!("unknown identity {name}"),
        };
        let mut rows: Vec<CheckRow> = names.iter().map(|n| CheckRow::new(n, k, pick(n), a.tol)).collect();
        if names.contains(&"metric_vertical") {
            let v = validate_points(m, &[(p.x.clone(), p.y.clone())], a.tol);
            let s = &v.samples[0];
            rows.push(CheckRow::new("homogeneity", k, s.homogeneity_residual, a.tol));
            rows.push(CheckRow::new("euler", k, s.euler_residual, a.tol));
            let mut pd = CheckRow::new("positive_definite", k, (-s.min_eigenvalue).max(0.0), 0.0);
            if !(s.min_eigenvalue > 0.0) {
                pd.verdict = Verdict::Fail;
            }
            pd.detail = format!("min_eigenvalue={:e}", s.min_eigenvalue);
            rows.push(pd);
        }
        Ok(rows)
    })
}

fn constant_flag_rows(m: &MetricInstance64, a: &VerifyArgs) -> Result<Vec<CheckRow>, Failure> {
    point_rows(m, a, |k, p| match check_constant_flag_chain(m, p, a.tol) {
        Ok(r) => {
            let first = r.parts.first().and_then(|p| p.points.first());
            let lambda = first.and_then(|q| q.value("lambda"));
            let c = first.and_then(|q| q.value("c"));
            let detail = format!(
                "lambda={} c={}",
                lambda.map_or("-".into(), |v| format!("{v:.10}")),
                c.map_or("-".into(), |v| format!("{v:.10}"))
            );
            Ok(r.parts
                .iter()
                .map(|part| {
                    let note = part.points.first().and_then(|q| q.note.clone());
                    CheckRow {
                        check: format!("chain_{}", part.id),
                        point: k,
                        t: None,
                        residual: part.residual,
                        tolerance: a.tol,
                        verdict: part.verdict,
                        detail: match note {
                            Some(n) => format!("{detail} ({n})"),
                            None => detail.clone(),
                        },
                    }
                })
                .collect())
        }
        Err(Error::NotConstantCurvature { spread }) => {
            let mut row = CheckRow::new("flag_constancy", k, spread, a.tol);
            row.verdict = Verdict::Fail;
            row.detail = "flag curvature is not constant at this point".into();
            Ok(vec![row])
        }
        Err(e) => Err(e.into()),
    })
}

fn start(m: &MetricInstance64, a: &VerifyArgs) -> Result<(Vec<f64>, Vec<f64>), Failure> {
    match (&a.x0, &a.y0) {
        (Some(x), Some(y)) => Ok((x.clone(), y.clone())),
        (None, None) => Ok(sample_points(m, 1, a.seed).remove(0)),
        _ => Err(Failure::usage("--x0 and --y0 must be given together")),
    }
}

fn ratio(m: &MetricInstance64, a: &VerifyArgs, g: &GeodesicSolution) -> Result<Option<f64>, Failure> {
    if a.c.is_some() {
        return Ok(a.c);
    }
    match fit_relative_stretch(m, &g.point::<f64>(0)) {
        Ok(fit) => Ok(Some(fit.c)),
        Err(Error::UndefinedFit(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn theorem3_rows(m: &MetricInstance64, a: &VerifyArgs) -> Result<Vec<CheckRow>, Failure> {
    if m.dim() != 2 {
        return Err(Failure::usage(format!("suite theorem3 needs a two-dimensional metric, got n = {}", m.dim())));
    }
    let (x0, y0) = start(m, a)?;
    let g = geodesic(m, &x0, &y0, a.t_end, a.steps, true)?;
    let Some(c) = ratio(m, a, &g)? else {
        return Err(Failure::usage("the relative-stretch ratio is undefined at the start point; pass --c"));
    };
    let r = check_theorem3_condition(m, &g, c, a.tol)?;
    Ok(r.points
        .iter()
        .enumerate()
        .map(|(k, p)| CheckRow {
            check: "theorem3_Q".into(),
            point: k,
            t: p.t,
            residual: p.residual,
            tolerance: a.tol,
            verdict: p.verdict,
            detail: format!(
                "c={c} mu={} Q={}{}",
                cell(p.value("mu")),
                cell(p.value("Q")),
                p.note.as_ref().map_or(String::new(), |n| format!(" ({n})"))
            ),
        })
        .collect())
}

/// Solution of `μ′ = μF(c/2 − μ)` at arc length `s`.
pub fn mu_oracle(mu0: f64, c: f64, s: f64) -> f64 {
    let k = 0.5 * c;
    if k == 0.0 {
        mu0 / (1.0 + mu0 * s)
    } else {
        let e = (k * s).exp();
        k * mu0 * e / (k + mu0 * (e - 1.0))
    }
}

fn flow_rows(m: &MetricInstance64, a: &VerifyArgs) -> Result<Vec<CheckRow>, Failure> {
    let (x0, y0) = start(m, a)?;
    let g = geodesic(m, &x0, &y0, a.t_end, a.steps, true)?;
    let c = ratio(m, a, &g)?;
    let want_phi = a.flows.contains(&FlowQuantity::Phi);
    let want_mu = a.flows.contains(&FlowQuantity::Mu) && m.dim() == 2;
    let mut qs = Vec::new();
    if want_phi {
        qs.push(FlowQuantity::Phi);
    }
    if want_mu {
        qs.push(FlowQuantity::Mu);
    }
    let fl = scalar_flows(m, &g, &qs, if want_phi { c } else { None })?;
    let mut rows = Vec::new();
    for (k, s) in fl.samples.iter().enumerate() {
        if want_phi {
            match (s.phi_law_residual, s.phi_law_half_residual) {
                (Some(full), Some(half)) => {
                    let mut r = CheckRow::new("phi_law", k, full, a.tol);
                    r.detail = format!("phi_dot - 2cF phi, c={}", c.unwrap_or(f64::NAN));
                    r.t = Some(s.t);
                    rows.push(r);
                    let mut r = CheckRow::new("phi_law_half", k, half, a.tol);
                    r.detail = "phi_dot - cF phi".into();
                    r.t = Some(s.t);
                    rows.push(r);
                }
                _ => rows.push(CheckRow {
                    check: "phi_law".into(),
                    point: k,
                    t: Some(s.t),
                    residual: 0.0,
                    tolerance: a.tol,
                    verdict: Verdict::Skipped,
                    detail: "relative-stretch ratio undefined; pass --c".into(),
                }),
            }
        }
        if want_mu {
            let mu0 = fl.samples[0].mu;
            match (s.mu, mu0) {
                (Some(mu), Some(mu0)) => {
                    let cc = c.unwrap_or(0.0);
                    let want = mu_oracle(mu0, cc, s.f * s.t);
                    let res = (mu - want).abs() / want.abs().max(1e-12);
                    let mut r = CheckRow::new("mu_flow", k, res, a.tol);
                    r.t = Some(s.t);
                    r.detail = format!("mu={mu:e} oracle={want:e} c={cc}");
                    rows.push(r);
                }
                _ => rows.push(CheckRow {
                    check: "mu_flow".into(),
                    point: k,
                    t: Some(s.t),
                    residual: 0.0,
                    tolerance: a.tol,
                    verdict: Verdict::Vacuous,
                    detail: "principal scalar vanishes".into(),
                }),
            }
        }
    }
    if let Some(fd) = fl.phi_dot_fd_mismatch {
        let mut r = CheckRow::new("phi_dot_fd", 0, fd, 1e-3);
        r.detail = "horizontal derivative vs central difference of sampled phi".into();
        rows.push(r);
    }
    Ok(rows)
}

pub fn run_suite(m: &MetricInstance64, a: &VerifyArgs) -> Result<Vec<CheckRow>, Failure> {
    match a.suite {
        Suite::Identities => identity_rows(
            m,
            a,
            &["metric_horizontal", "metric_vertical", "f_horizontal", "y_horizontal", "stretch_antisymmetry"],
        ),
        Suite::Bianchi => identity_rows(m, a, &["bianchi_first", "bianchi_second", "stretch_routes"]),
        Suite::LandsbergRoutes => identity_rows(m, a, &["landsberg_routes", "mean_landsberg_routes"]),
        Suite::ConstantFlag => constant_flag_rows(m, a),
        Suite::Theorem3 => theorem3_rows(m, a),
        Suite::Flows => flow_rows(m, a),
    }
}

pub fn rows_csv(suite: Suite, rows: &[CheckRow]) -> Result<String, Failure> {
    let header: Vec<String> = ["suite", "check", "point", "t", "residual", "tolerance", "verdict", "detail"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                suite.to_string(),
                r.check.clone(),
                r.point.to_string(),
                cell(r.t),
                format!("{:e}", r.residual),
                format!("{:e}", r.tolerance),
                verdict_name(r.verdict).into(),
                r.detail.clone(),
            ]
        })
        .collect();
    csv_string(&header, &body)
}

fn table(suite: Suite, rows: &[CheckRow]) -> String {
    let w = rows.iter().map(|r| r.check.len()).max().unwrap_or(5).max(5);
    let mut s = format!("{:<w$}  {:>5}  {:>12}  {:>9}  verdict\n", "check", "point", "residual", "tol");
    for r in rows {
        s += &format!(
            "{:<w$}  {:>5}  {:>12.3e}  {:>9.1e}  {}{}\n",
            r.check,
            r.point,
            r.residual,
            r.tolerance,
            verdict_name(r.verdict),
            if r.detail.is_empty() { String::new() } else { format!("  {}", r.detail) }
        );
    }
    let failed = rows.iter().filter(|r| r.verdict == Verdict::Fail).count();
    let worst = rows
        .iter()
        .filter(|r| matches!(r.verdict, Verdict::Pass | Verdict::Fail))
        .fold(0.0f64, |a, r| a.max(r.residual));
    s += &format!(
        "suite {suite}: {} ({} checks, {failed} failed, max residual {worst:.3e})\n",
        if failed == 0 { "PASS" } else { "FAIL" },
        rows.len()
    );
    s
}

pub fn cmd_verify(m: &MetricInstance64, a: &VerifyArgs) -> Result<i32, Failure> {
    let rows = run_suite(m, a)?;
    let failed = rows.iter().any(|r| r.verdict == Verdict::Fail);
    if let Some(path) = &a.out {
        emit(Some(path), &rows_csv(a.suite, &rows)?)?;
    }
    emit(None, &table(a.suite, &rows))?;
    Ok(if failed { EXIT_FAILED } else { EXIT_OK })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mu_oracle_solves_its_ode() {
        for (mu0, c) in [(1.0, 0.0), (0.3, -1.0), (-0.5, -1.0), (0.2, 0.7)] {
            let h = 1e-5;
            for s in [0.0, 0.4, 0.9] {
                let d = (mu_oracle(mu0, c, s + h) - mu_oracle(mu0, c, s - h)) / (2.0 * h);
                let mu = mu_oracle(mu0, c, s);
                assert!((d - mu * (0.5 * c - mu)).abs() < 1e-8);
            }
            assert!((mu_oracle(mu0, c, 0.0) - mu0).abs() < 1e-15);
        }
        assert!((mu_oracle(-0.5, -1.0, 3.0) + 0.5).abs() < 1e-15);
    }
}
