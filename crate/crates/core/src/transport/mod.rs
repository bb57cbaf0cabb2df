//! Geodesics, parallel transport and scalar flows along the spray.

pub mod ode;
mod flows;


use rayon::prelude::*;
use serde::Serialize;

use crate::curvature::{JetGeometry, PointState};
use crate::error::{Error, Result};
use crate::metric::MetricInstance;
use crate::scalar::{lit, to_f64, Real};

pub use flows::{scalar_flows, FlowQuantity, FlowSample, ScalarFlow};
pub use ode::{OdeOptions, StepStats};

use ode::Veto;

#[derive(Clone, Debug, Serialize)]
pub struct GeodesicOptions {
    /// Final parameter value; negative integrates backwards.
    pub t_end: f64,
    /// Number of equal intervals in the output grid.
    pub samples: usize,
    /// Rescale `y0` so that `F(x0, y0) = 1`.
    pub unit_speed: bool,
    /// Largest relative drift of `F` a step may introduce.
    pub f_tol: f64,
    pub ode: OdeOptions,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        GeodesicOptions {
            t_end: 1.0,
            samples: 20,
            unit_speed: true,
            f_tol: 1e-9,
            ode: OdeOptions::default(),
        }
    }
}

impl GeodesicOptions {
    pub fn new(t_end: f64, samples: usize) -> Self {
        GeodesicOptions {
            t_end,
            samples,
            ..Default::default()
        }
    }
}

/// A sampled solution of `ẍ + 2G(x, ẋ) = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct GeodesicSolution {
    pub times: Vec<f64>,
    /// `(x(t), ẋ(t))` at each sample time.
    pub states: Vec<PointState<f64>>,
    pub stats: StepStats,
    pub unit_speed: bool,
    /// `F` at the initial point.
    pub speed: f64,
    /// `max |F(t) − F(0)| / F(0)` over the samples.
    pub speed_drift: f64,
}

impl GeodesicSolution {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn point<T: Real>(&self, k: usize) -> PointState<T> {
        PointState::from_f64(&self.states[k].x, &self.states[k].y)
    }
}

pub(crate) fn grid(t_end: f64, samples: usize) -> Vec<f64> {
    let samples = samples.max(1);
    (0..=samples).map(|k| t_end * k as f64 / samples as f64).collect()
}

fn to_t<T: Real>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&a| lit(a)).collect()
}

fn to_f(v: &[impl Real]) -> Vec<f64> {
    v.iter().map(|&a| to_f64(a)).collect()
}

fn geometry<T: Real>(m: &MetricInstance<T>, x: &[T], y: &[T], order: usize) -> Result<JetGeometry<T>> {
    JetGeometry::new(m, &PointState::new(x.to_vec(), y.to_vec()), order)
}

fn chart_exit(e: Error, n: usize) -> Error {
    match e {
        Error::ChartExit { t, mut x } => {
            x.truncate(n);
            Error::ChartExit { t, x }
        }
        e => e,
    }
}

/// Integrates the geodesic through `(x0, y0)` with adaptive Dormand–Prince
/// steps, rejecting any step that moves `F(x, ẋ)` by more than `f_tol`.
pub fn integrate_geodesic<T: Real>(
    m: &MetricInstance<T>,
    x0: &[f64],
    y0: &[f64],
    opts: &GeodesicOptions,
) -> Result<GeodesicSolution> {
    let n = m.dim();
    if x0.len() != n || y0.len() != n {
        return Err(Error::InvalidArgument(format!("x0 and y0 must have dimension {n}")));
    }
    if !(opts.f_tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let xt = to_t::<T>(x0);
    let mut yt = to_t::<T>(y0);
    let f0 = m.value(&xt, &yt)?;
    if opts.unit_speed {
        yt = yt.iter().map(|&v| v / f0).collect();
    }
    let speed = to_f64(m.value(&xt, &yt)?);
    let mut state = xt.clone();
    state.extend_from_slice(&yt);

    let times: Vec<T> = grid(opts.t_end, opts.samples).iter().map(|&t| lit(t)).collect();
    let rhs = |_t: T, s: &[T]| -> Result<Vec<T>> {
        let geo = geometry(m, &s[..n], &s[n..], 2)?;
        let g = geo.spray.value();
        let mut out = s[n..].to_vec();
        out.extend(g.data().iter().map(|&gi| -lit::<T>(2.0) * gi));
        Ok(out)
    };
    let veto = |_t: T, s: &[T]| -> Result<Veto> {
        let f = to_f64(m.value(&s[..n], &s[n..])?);
        Ok(if ((f - speed) / speed).abs() <= opts.f_tol {
            Veto::Accept
        } else {
            Veto::Reject
        })
    };
    let (states, stats) = ode::integrate(rhs, &times, &state, &opts.ode, veto).map_err(|e| chart_exit(e, n))?;

    let mut drift = 0.0f64;
    let mut out = Vec::with_capacity(states.len());
    for s in &states {
        let f = to_f64(m.value(&s[..n], &s[n..])?);
        drift = drift.max(((f - speed) / speed).abs());
        out.push(PointState::new(to_f(&s[..n]), to_f(&s[n..])));
    }
    Ok(GeodesicSolution {
        times: times.iter().map(|&t| to_f64(t)).collect(),
        states: out,
        stats,
        unit_speed: opts.unit_speed,
        speed,
        speed_drift: drift,
    })
}

/// The curve a vector is transported along, parametrised over `[0, t_end]`.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Curve {
    /// The geodesic with initial data `(x0, y0)`, integrated jointly with
    /// the transport.
    Geodesic { x0: Vec<f64>, y0: Vec<f64> },
    /// The chart segment `x0 + t·dx`.
    Segment { x0: Vec<f64>, dx: Vec<f64> },
}

impl Curve {
    /// The curve of a computed geodesic (its initial data).
    pub fn from_geodesic(g: &GeodesicSolution) -> Self {
        Curve::Geodesic {
            x0: g.states[0].x.clone(),
            y0: g.states[0].y.clone(),
        }
    }

    fn start(&self) -> (&[f64], &[f64]) {
        match self {
            Curve::Geodesic { x0, y0 } => (x0, y0),
            Curve::Segment { x0, dx } => (x0, dx),
        }
    }
}

/// Where the connection is evaluated during transport.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// Linear transport `dV/dt = −Γ(x, ẋ)(V, ẋ)`.
    CurveVelocity,
    /// Nonlinear transport `dV/dt = −N(x, V) ẋ`.
    TransportedVector,
    /// Linear transport `dV/dt = −Γ(x, y)(V, ẋ)` with `y` itself carried
    /// along by nonlinear transport from the given initial support.
    Support(Vec<f64>),
}

#[derive(Clone, Debug, Serialize)]
pub struct TransportResult {
    pub curve: Curve,
    pub reference: Reference,
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    /// `V(t)`
    pub vectors: Vec<Vec<f64>>,
    /// The reference vector at each sample.
    pub supports: Vec<Vec<f64>>,
    /// `g_ref(V, V)`
    pub lengths: Vec<f64>,
    pub stats: StepStats,
}

impl TransportResult {
    pub fn final_vector(&self) -> &[f64] {
        self.vectors.last().expect("non-empty transport")
    }

    /// `max |g(V,V)(t) − g(V,V)(0)|` relative to the initial value.
    pub fn length_drift(&self) -> f64 {
        let l0 = self.lengths[0];
        self.lengths.iter().fold(0.0, |m, l| m.max((l - l0).abs() / l0.abs().max(1e-300)))
    }
}

fn mat_vec<T: Real>(a: &crate::tensor::Tensor<T>, v: &[T]) -> Vec<T> {
    let n = v.len();
    (0..n).map(|i| (0..n).map(|j| *a.get(&[i, j]) * v[j]).sum()).collect()
}

fn quad<T: Real>(g: &crate::tensor::Tensor<T>, a: &[T], b: &[T]) -> T {
    let n = a.len();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            s = s + *g.get(&[i, j]) * a[i] * b[j];
        }
    }
    s
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|&a| a * a).sum::<T>().sqrt()
}

/// Transports `w0` along `curve` for `t ∈ [0, t_end]` and samples it on a
/// grid of `samples` intervals.
pub fn parallel_transport<T: Real>(
    m: &MetricInstance<T>,
    curve: &Curve,
    w0: &[f64],
    reference: &Reference,
    t_end: f64,
    samples: usize,
    opts: &OdeOptions,
) -> Result<TransportResult> {
    let n = m.dim();
    let (x0, v0) = curve.start();
    if x0.len() != n || v0.len() != n || w0.len() != n {
        return Err(Error::InvalidArgument(format!("curve and vector must have dimension {n}")));
    }
    let geodesic = matches!(curve, Curve::Geodesic { .. });
    let support = match reference {
        Reference::Support(s) if s.len() != n => {
            return Err(Error::InvalidArgument(format!("support must have dimension {n}")))
        }
        Reference::Support(s) => Some(s.clone()),
        _ => None,
    };
    let w_scale: T = lit(w0.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    if w_scale == T::zero() && *reference == Reference::TransportedVector {
        return Err(Error::VanishingVector { t: 0.0 });
    }

    let mut state: Vec<T> = to_t(x0);
    state.extend(to_t::<T>(v0));
    state.extend(to_t::<T>(w0));
    if let Some(s) = &support {
        state.extend(to_t::<T>(s));
    }
    let times: Vec<T> = grid(t_end, samples).iter().map(|&t| lit(t)).collect();
    let two = lit::<T>(2.0);

    let rhs = |t: T, s: &[T]| -> Result<Vec<T>> {
        let (x, v, w) = (&s[..n], &s[n..2 * n], &s[2 * n..3 * n]);
        let mut out = v.to_vec();
        let mut vel_geo = None;
        if geodesic {
            let geo = geometry(m, x, v, 3)?;
            out.extend(geo.spray.value().data().iter().map(|&g| -two * g));
            vel_geo = Some(geo);
        } else {
            out.extend(std::iter::repeat_n(T::zero(), n));
        }
        match reference {
            Reference::CurveVelocity => {
                let nl = match vel_geo {
                    Some(geo) => geo.nonlinear()?.value(),
                    None => geometry(m, x, v, 3)?.nonlinear()?.value(),
                };
                out.extend(mat_vec(&nl, w).into_iter().map(|a| -a));
            }
            Reference::TransportedVector => {
                if norm(w) <= lit::<T>(1e-12) * w_scale {
                    return Err(Error::VanishingVector { t: to_f64(t) });
                }
                let nl = geometry(m, x, w, 3)?.nonlinear()?.value();
                out.extend(mat_vec(&nl, v).into_iter().map(|a| -a));
            }
            Reference::Support(_) => {
                let y = &s[3 * n..];
                if norm(y) == T::zero() {
                    return Err(Error::VanishingVector { t: to_f64(t) });
                }
                let geo = geometry(m, x, y, 4)?;
                let gamma = geo.gamma()?.value();
                for i in 0..n {
                    let mut acc = T::zero();
                    for j in 0..n {
                        for k in 0..n {
                            acc = acc + *gamma.get(&[i, j, k]) * w[j] * v[k];
                        }
                    }
                    out.push(-acc);
                }
                let nl = geo.nonlinear()?.value();
                out.extend(mat_vec(&nl, v).into_iter().map(|a| -a));
            }
        }
        Ok(out)
    };
    let (states, stats) =
        ode::integrate(rhs, &times, &state, opts, |_, _| Ok(Veto::Accept)).map_err(|e| chart_exit(e, n))?;

    let mut result = TransportResult {
        curve: curve.clone(),
        reference: reference.clone(),
        times: times.iter().map(|&t| to_f64(t)).collect(),
        points: Vec::new(),
        velocities: Vec::new(),
        vectors: Vec::new(),
        supports: Vec::new(),
        lengths: Vec::new(),
        stats,
    };
    for s in &states {
        let (x, v, w) = (&s[..n], &s[n..2 * n], &s[2 * n..3 * n]);
        let r: &[T] = match reference {
            Reference::CurveVelocity => v,
            Reference::TransportedVector => w,
            Reference::Support(_) => &s[3 * n..],
        };
        let g = geometry(m, x, r, 2)?.g.value();
        result.lengths.push(to_f64(quad(&g, w, w)));
        result.points.push(to_f(x));
        result.velocities.push(to_f(v));
        result.vectors.push(to_f(w));
        result.supports.push(to_f(r));
    }
    Ok(result)
}

/// Which transport the parallelogram experiment uses.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HolonomyMode {
    /// `w` carried by nonlinear transport; its length is `F(x, w)`.
    Nonlinear,
    /// `w` carried linearly with the connection at a support vector that is
    /// itself transported nonlinearly; its length is `√g_y(w, w)`.
    Linear { support: Vec<f64> },
}

#[derive(Clone, Debug, Serialize)]
pub struct ParallelogramExperiment {
    pub x0: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w0: Vec<f64>,
    pub mode: HolonomyMode,
    pub eps: Vec<f64>,
    /// `δ(ε) = |‖w_final‖ − ‖w_initial‖|`
    pub defects: Vec<f64>,
    pub final_vectors: Vec<Vec<f64>>,
    /// Slope of `log δ` against `log ε`, when at least two defects are
    /// above round-off.
    pub exponent: Option<f64>,
}

/// Carries `w` (and its support) once around the loop
/// `x0 → x0+εu → x0+εu+εv → x0+εv → x0` of chart segments.
pub fn transport_loop<T: Real>(
    m: &MetricInstance<T>,
    x0: &[f64],
    sides: [&[f64]; 4],
    w0: &[f64],
    mode: &HolonomyMode,
    opts: &OdeOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut x = x0.to_vec();
    let mut w = w0.to_vec();
    let mut support = match mode {
        HolonomyMode::Nonlinear => None,
        HolonomyMode::Linear { support } => Some(support.clone()),
    };
    for dx in sides {
        let reference = match &support {
            None => Reference::TransportedVector,
            Some(s) => Reference::Support(s.clone()),
        };
        let curve = Curve::Segment {
            x0: x.clone(),
            dx: dx.to_vec(),
        };
        let r = parallel_transport(m, &curve, &w, &reference, 1.0, 1, opts)?;
        x = r.points.last().expect("endpoint").clone();
        w = r.final_vector().to_vec();
        if support.is_some() {
            support = Some(r.supports.last().expect("endpoint").clone());
        }
    }
    Ok((w, support.unwrap_or_default()))
}

fn length<T: Real>(m: &MetricInstance<T>, x: &[f64], w: &[f64], support: Option<&[f64]>) -> Result<f64> {
    let xt = to_t::<T>(x);
    match support {
        None => Ok(to_f64(m.value(&xt, &to_t(w))?)),
        Some(y) => {
            let g = geometry(m, &xt, &to_t(y), 2)?.g.value();
            let wt = to_t::<T>(w);
            Ok(to_f64(quad(&g, &wt, &wt).sqrt()))
        }
    }
}

/// Length defect of `w0` around coordinate parallelograms of side `εu`,
/// `εv` for each `ε`, with a log-log fit of the decay.
pub fn parallelogram_holonomy<T: Real>(
    m: &MetricInstance<T>,
    x0: &[f64],
    u: &[f64],
    v: &[f64],
    w0: &[f64],
    eps_list: &[f64],
    mode: &HolonomyMode,
    opts: &OdeOptions,
) -> Result<ParallelogramExperiment> {
    let n = m.dim();
    if u.len() != n || v.len() != n || w0.len() != n || x0.len() != n {
        return Err(Error::InvalidArgument(format!("vectors must have dimension {n}")));
    }
    let uu: f64 = u.iter().map(|a| a * a).sum();
    let vv: f64 = v.iter().map(|a| a * a).sum();
    let uv: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    if uu * vv - uv * uv <= 1e-12 * uu * vv {
        return Err(Error::InvalidArgument("sides must be linearly independent".into()));
    }
    let support = match mode {
        HolonomyMode::Nonlinear => None,
        HolonomyMode::Linear { support } => Some(support.as_slice()),
    };
    let initial = length(m, x0, w0, support)?;
    let rows: Vec<Result<(f64, Vec<f64>)>> = eps_list
        .par_iter()
        .map(|&eps| {
            let su: Vec<f64> = u.iter().map(|a| eps * a).collect();
            let sv: Vec<f64> = v.iter().map(|a| eps * a).collect();
            let nu: Vec<f64> = su.iter().map(|a| -a).collect();
            let nv: Vec<f64> = sv.iter().map(|a| -a).collect();
            let (w, y) = transport_loop(m, x0, [&su, &sv, &nu, &nv], w0, mode, opts)?;
            let fin = length(m, x0, &w, support.map(|_| y.as_slice()))?;
            Ok(((fin - initial).abs(), w))
        })
        .collect();
    let mut defects = Vec::new();
    let mut finals = Vec::new();
    for r in rows {
        let (d, w) = r?;
        defects.push(d);
        finals.push(w);
    }
    Ok(ParallelogramExperiment {
        x0: x0.to_vec(),
        u: u.to_vec(),
        v: v.to_vec(),
        w0: w0.to_vec(),
        mode: mode.clone(),
        eps: eps_list.to_vec(),
        exponent: loglog_slope(eps_list, &defects, 1e-13 * initial.max(1.0)),
        defects,
        final_vectors: finals,
    })
}

/// Least-squares slope of `log d` against `log e` over entries with
/// `d > floor`.
pub fn loglog_slope(e: &[f64], d: &[f64], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = e
        .iter()
        .zip(d)
        .filter(|(&a, &b)| a > 0.0 && b > floor)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}
