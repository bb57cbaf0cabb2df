use std::path::PathBuf;

use finsler::metric::MetricSpec;
use finsler::transport::{
    integrate_geodesic, parallelogram_holonomy, scalar_flows, FlowQuantity, GeodesicOptions, GeodesicSolution,
    HolonomyMode, OdeOptions, ParallelogramExperiment, ScalarFlow, StepStats,
};
use finsler::MetricInstance64;
use serde::Serialize;

use crate::output::{cell, csv_string, emit, json_string, parse_vec, Failure, ToolInfo, EXIT_OK, TOOL};

pub const GEODESIC_SCHEMA: &str = "finsler-geodesic/1";

pub fn parse_flows(s: &str) -> Result<Vec<FlowQuantity>, Failure> {
    let mut out = Vec::new();
    for t in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let q = FlowQuantity::parse(t).ok_or_else(|| {
            Failure::usage(format!("unknown flow quantity {t:?} (expected phi, L_norm, mu, p or c)"))
        })?;
        if !out.contains(&q) {
            out.push(q);
        }
    }
    Ok(out)
}

/// The parallelogram request `u;v;w;eps-list`, each a comma-separated list.
#[derive(Clone, Debug)]
pub struct ParallelogramSpec {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub eps: Vec<f64>,
}

pub fn parse_parallelogram(s: &str) -> Result<ParallelogramSpec, Failure> {
    let parts: Vec<&str> = s.split(';').collect();
    if parts.len() != 4 {
        return Err(Failure::usage("--parallelogram expects u;v;w;eps-list"));
    }
    let eps = parse_vec(parts[3], "eps-list")?;
    if eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Failure::usage("eps values must be positive"));
    }
    Ok(ParallelogramSpec {
        u: parse_vec(parts[0], "u")?,
        v: parse_vec(parts[1], "v")?,
        w: parse_vec(parts[2], "w")?,
        eps,
    })
}

pub fn geodesic(
    m: &MetricInstance64,
    x0: &[f64],
    y0: &[f64],
    t_end: f64,
    samples: usize,
    unit_speed: bool,
) -> Result<GeodesicSolution, Failure> {
    let n = m.dim();
    if x0.len() != n || y0.len() != n {
        return Err(Failure::usage(format!("x0 and y0 must have {n} components")));
    }
    if !t_end.is_finite() || t_end == 0.0 {
        return Err(Failure::usage("--t must be finite and non-zero"));
    }
    let mut opts = GeodesicOptions::new(t_end, samples.max(1));
    opts.unit_speed = unit_speed;
    Ok(integrate_geodesic(m, x0, y0, &opts)?)
}

#[derive(Debug, Serialize)]
pub struct FlowSummary {
    pub quantities: Vec<&'static str>,
    pub c: Option<f64>,
    pub max_phi_law_residual: Option<f64>,
    pub max_phi_law_half_residual: Option<f64>,
    pub phi_dot_fd_mismatch: Option<f64>,
    /// Quantities that could not be evaluated at some sample, with the first
    /// reason met.
    pub unavailable: Vec<(String, String)>,
}

#[derive(Debug, Serialize)]
pub struct GeodesicSummary {
    pub schema: &'static str,
    pub tool: ToolInfo,
    pub metric: MetricSpec,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub t_end: f64,
    pub samples: usize,
    pub unit_speed: bool,
    pub speed: f64,
    pub speed_drift: f64,
    pub stats: StepStats,
    pub flows: Option<FlowSummary>,
    pub parallelogram: Option<ParallelogramExperiment>,
}

pub struct GeodesicArgs {
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub t_end: f64,
    pub samples: usize,
    pub unit_speed: bool,
    pub flows: Vec<FlowQuantity>,
    pub c: Option<f64>,
    pub parallelogram: Option<ParallelogramSpec>,
    pub nonlinear_holonomy: bool,
    pub support: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub holonomy_out: Option<PathBuf>,
}

fn flow_columns(q: FlowQuantity, with_law: bool) -> Vec<&'static str> {
    match q {
        FlowQuantity::Phi if with_law => vec!["phi", "phi_dot", "phi_law_residual", "phi_law_half_residual"],
        FlowQuantity::Phi => vec!["phi", "phi_dot"],
        FlowQuantity::LNorm => vec!["L_norm"],
        FlowQuantity::Mu => vec!["mu", "mu_prime"],
        FlowQuantity::P => vec!["p", "p_prime"],
        FlowQuantity::C => vec!["c", "c_prime"],
    }
}

pub fn time_series_csv(
    m: &MetricInstance64,
    g: &GeodesicSolution,
    flows: &[FlowQuantity],
    flow: Option<&ScalarFlow>,
) -> Result<String, Failure> {
    let n = m.dim();
    let with_law = flow.is_some_and(|f| f.c.is_some());
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=n).map(|i| format!("y{i}")));
    header.push("F".into());
    for &q in flows {
        header.extend(flow_columns(q, with_law).into_iter().map(String::from));
    }
    let mut rows = Vec::with_capacity(g.len());
    for k in 0..g.len() {
        let st = &g.states[k];
        let mut r = vec![cell(Some(g.times[k]))];
        r.extend(st.x.iter().map(|&v| cell(Some(v))));
        r.extend(st.y.iter().map(|&v| cell(Some(v))));
        let f = match flow {
            Some(fl) => fl.samples[k].f,
            None => m.value(&st.x, &st.y).map_err(finsler::Error::from)?,
        };
        r.push(cell(Some(f)));
        if let Some(fl) = flow {
            let s = &fl.samples[k];
            for &q in flows {
                match q {
                    FlowQuantity::Phi => {
                        r.push(cell(s.phi));
                        r.push(cell(s.phi_dot));
                        if with_law {
                            r.push(cell(s.phi_law_residual));
                            r.push(cell(s.phi_law_half_residual));
                        }
                    }
                    FlowQuantity::LNorm => r.push(cell(s.l_norm)),
                    FlowQuantity::Mu => {
                        r.push(cell(s.mu));
                        r.push(cell(s.mu_prime));
                    }
                    FlowQuantity::P => {
                        r.push(cell(s.p));
                        r.push(cell(s.p_prime));
                    }
                    FlowQuantity::C => {
                        r.push(cell(s.c));
                        r.push(cell(s.c_prime));
                    }
                }
            }
        }
        rows.push(r);
    }
    csv_string(&header, &rows)
}

pub fn holonomy_csv(e: &ParallelogramExperiment) -> Result<String, Failure> {
    let n = e.w0.len();
    let mut header: Vec<String> = vec!["eps".into(), "delta".into()];
    header.extend((1..=n).map(|i| format!("w{i}")));
    let rows: Vec<Vec<String>> = e
        .eps
        .iter()
        .zip(&e.defects)
        .zip(&e.final_vectors)
        .map(|((&eps, &d), w)| {
            let mut r = vec![cell(Some(eps)), cell(Some(d))];
            r.extend(w.iter().map(|&v| cell(Some(v))));
            r
        })
        .collect();
    csv_string(&header, &rows)
}

fn summarize(flow: &ScalarFlow) -> FlowSummary {
    let mut unavailable: Vec<(String, String)> = Vec::new();
    for s in &flow.samples {
        for (q, why) in &s.status {
            if !unavailable.iter().any(|(n, _)| n == q.name()) {
                unavailable.push((q.name().to_string(), why.clone()));
            }
        }
    }
    FlowSummary {
        quantities: flow.quantities.iter().map(|q| q.name()).collect(),
        c: flow.c,
        max_phi_law_residual: flow.max_phi_law_residual,
        max_phi_law_half_residual: flow.max_phi_law_half_residual,
        phi_dot_fd_mismatch: flow.phi_dot_fd_mismatch,
        unavailable,
    }
}

pub fn cmd_geodesic(m: &MetricInstance64, a: &GeodesicArgs) -> Result<i32, Failure> {
    let n = m.dim();
    let g = geodesic(m, &a.x0, &a.y0, a.t_end, a.samples, a.unit_speed)?;
    let flow = if a.flows.is_empty() && a.c.is_none() {
        None
    } else {
        Some(scalar_flows(m, &g, &a.flows, a.c)?)
    };

    let parallelogram = match &a.parallelogram {
        None => None,
        Some(p) => {
            if [&p.u, &p.v, &p.w].iter().any(|v| v.len() != n) {
                return Err(Failure::usage(format!("parallelogram vectors must have {n} components")));
            }
            let mode = if a.nonlinear_holonomy {
                HolonomyMode::Nonlinear
            } else {
                let support = a.support.clone().unwrap_or_else(|| a.y0.clone());
                if support.len() != n {
                    return Err(Failure::usage(format!("--support must have {n} components")));
                }
                HolonomyMode::Linear { support }
            };
            Some(parallelogram_holonomy(m, &a.x0, &p.u, &p.v, &p.w, &p.eps, &mode, &OdeOptions::default())?)
        }
    };

    let csv = time_series_csv(m, &g, &a.flows, flow.as_ref())?;
    let summary = GeodesicSummary {
        schema: GEODESIC_SCHEMA,
        tool: TOOL,
        metric: m.spec().clone(),
        x0: a.x0.clone(),
        y0: a.y0.clone(),
        t_end: a.t_end,
        samples: g.len(),
        unit_speed: a.unit_speed,
        speed: g.speed,
        speed_drift: g.speed_drift,
        stats: g.stats,
        flows: flow.as_ref().map(summarize),
        parallelogram,
    };
    let summary_text = json_string(&summary)?;
    let holonomy_text = match (&a.holonomy_out, &summary.parallelogram) {
        (Some(_), Some(e)) => Some(holonomy_csv(e)?),
        _ => None,
    };

    emit(a.out.as_deref(), &csv)?;
    if let (Some(path), Some(text)) = (&a.holonomy_out, holonomy_text) {
        emit(Some(path), &text)?;
    }
    match (&a.summary, &a.out) {
        (Some(path), _) => emit(Some(path), &summary_text)?,
        (None, Some(_)) => emit(None, &summary_text)?,
        (None, None) => {}
    }
    Ok(EXIT_OK)
}
