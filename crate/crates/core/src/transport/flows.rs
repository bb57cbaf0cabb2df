use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GeodesicSolution;
use crate::analysis::{self, I_FLOOR};
use crate::curvature::{JetGeometry, PointState, Tower};
use crate::error::{Error, Result};
use crate::metric::MetricInstance;
use crate::scalar::{to_f64, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowQuantity {
    /// `φ = L^{ijk} L_ijk`
    Phi,
    /// `√φ`
    LNorm,
    /// `I_{|1} / I` in two dimensions.
    Mu,
    /// The characteristic scalar of the semi-C-reducible form.
    P,
    /// The relative-stretch ratio.
    C,
}

impl FlowQuantity {
    pub const ALL: [FlowQuantity; 5] = [
        FlowQuantity::Phi,
        FlowQuantity::LNorm,
        FlowQuantity::Mu,
        FlowQuantity::P,
        FlowQuantity::C,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FlowQuantity::Phi => "phi",
            FlowQuantity::LNorm => "L_norm",
            FlowQuantity::Mu => "mu",
            FlowQuantity::P => "p",
            FlowQuantity::C => "c",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|q| q.name().eq_ignore_ascii_case(s) || (s == "l_norm" && *q == FlowQuantity::LNorm))
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct FlowSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub f: f64,
    pub phi: Option<f64>,
    /// `φ_{|m} yᵐ`
    pub phi_dot: Option<f64>,
    pub l_norm: Option<f64>,
    pub mu: Option<f64>,
    pub mu_prime: Option<f64>,
    pub p: Option<f64>,
    pub p_prime: Option<f64>,
    pub c: Option<f64>,
    pub c_prime: Option<f64>,
    /// `|φ̇ − 2cFφ|` relative to the larger of its two terms.
    pub phi_law_residual: Option<f64>,
    /// `|φ̇ − cFφ|`, same normalisation.
    pub phi_law_half_residual: Option<f64>,
    /// Quantities that could not be evaluated here, with the reason.
    pub status: Vec<(FlowQuantity, String)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalarFlow {
    pub quantities: Vec<FlowQuantity>,
    /// The ratio supplied for the `φ` law, if any.
    pub c: Option<f64>,
    pub samples: Vec<FlowSample>,
    pub max_phi_law_residual: Option<f64>,
    pub max_phi_law_half_residual: Option<f64>,
    /// Largest `|Δφ/Δt − φ̇| / max|φ̇|` over interior samples, with `Δφ/Δt`
    /// the central difference of the sampled flow.
    pub phi_dot_fd_mismatch: Option<f64>,
}

fn law_residual(phi_dot: f64, rhs: f64) -> f64 {
    let scale = phi_dot.abs().max(rhs.abs());
    if scale > 1e-300 {
        (phi_dot - rhs).abs() / scale
    } else {
        0.0
    }
}

fn sample<T: Real>(
    m: &MetricInstance<T>,
    p: &PointState<T>,
    qs: &[FlowQuantity],
    c_supplied: Option<f64>,
) -> Result<FlowSample> {
    use FlowQuantity as Q;
    let want = |q: Q| qs.contains(&q);
    let mut s = FlowSample {
        x: p.x.iter().map(|&v| to_f64(v)).collect(),
        y: p.y.iter().map(|&v| to_f64(v)).collect(),
        ..Default::default()
    };
    let n = p.dim();
    let phi_wanted = want(Q::Phi) || want(Q::LNorm) || c_supplied.is_some();
    let (tower, own) = if want(Q::C) {
        (Some(Tower::build(m, p)?), None)
    } else {
        (None, Some(JetGeometry::new(m, p, if phi_wanted { 6 } else { 5 })?))
    };
    let geo = match (&tower, &own) {
        (Some(t), _) => &t.geo,
        (None, Some(g)) => g,
        _ => unreachable!("one geometry is always built"),
    };
    let f = to_f64(geo.f.value());
    s.f = f;

    if let Some(t) = &tower {
        match analysis::relative_stretch_jet(t) {
            Ok((c, _, _)) => {
                s.c = Some(to_f64(c.value()));
                s.c_prime = Some(to_f64(analysis::h_dot(geo, &c)?.value()));
            }
            Err(e @ Error::UndefinedFit(_)) => s.status.push((Q::C, e.to_string())),
            Err(e) => return Err(e),
        }
    }

    if phi_wanted {
        let l = match &tower {
            Some(t) => t.l.clone(),
            None => geo.landsberg(&geo.berwald()?),
        };
        let phi = geo.inner(&l, &l).data()[0].clone();
        let phi_dot = to_f64(analysis::h_dot(geo, &phi)?.value());
        let phi = to_f64(phi.value());
        s.phi = Some(phi);
        s.phi_dot = Some(phi_dot);
        s.l_norm = Some(phi.max(0.0).sqrt());
        if let Some(c) = c_supplied {
            s.phi_law_residual = Some(law_residual(phi_dot, 2.0 * c * f * phi));
            s.phi_law_half_residual = Some(law_residual(phi_dot, c * f * phi));
        }
    }

    if want(Q::Mu) {
        if n != 2 {
            let e = Error::DimensionError {
                required: "n = 2",
                found: n,
            };
            s.status.push((Q::Mu, e.to_string()));
        } else {
            let cart = geo.cartan()?;
            let norm = to_f64(cart.value().max_abs()) * f;
            if norm <= I_FLOOR {
                s.status.push((Q::Mu, Error::RiemannianPoint { norm }.to_string()));
            } else {
                let fr = analysis::frame_jets(geo, &cart)?;
                let mu = analysis::mu_jet(geo, &fr)?;
                s.mu_prime = Some(to_f64(analysis::h_dot(geo, &mu)?.value()));
                s.mu = Some(to_f64(mu.value()));
            }
        }
    }

    if want(Q::P) {
        if n < 3 {
            let e = Error::DimensionError {
                required: "n >= 3",
                found: n,
            };
            s.status.push((Q::P, e.to_string()));
        } else {
            match analysis::semi_c_at(geo) {
                Ok(fit) => {
                    s.p = Some(fit.p);
                    s.p_prime = Some(fit.p_prime);
                }
                Err(e @ Error::RiemannianPoint { .. }) => s.status.push((Q::P, e.to_string())),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(s)
}

/// Evaluates the requested scalars at every sample of a geodesic, with
/// `φ̇` from the horizontal derivative. When `c` is given, also reports the
/// residuals of `φ̇ = 2cFφ` and of `φ̇ = cFφ`.
pub fn scalar_flows<T: Real>(
    m: &MetricInstance<T>,
    geod: &GeodesicSolution,
    quantities: &[FlowQuantity],
    c: Option<f64>,
) -> Result<ScalarFlow> {
    let rows: Vec<Result<FlowSample>> = (0..geod.len())
        .into_par_iter()
        .map(|k| {
            let mut s = sample(m, &geod.point::<T>(k), quantities, c)?;
            s.t = geod.times[k];
            Ok(s)
        })
        .collect();
    let samples: Vec<FlowSample> = rows.into_iter().collect::<Result<_>>()?;
    let max_of = |f: fn(&FlowSample) -> Option<f64>| {
        samples.iter().filter_map(f).fold(None, |a: Option<f64>, v| Some(a.map_or(v, |a| a.max(v))))
    };
    let max_phi_law_residual = max_of(|s| s.phi_law_residual);
    let max_phi_law_half_residual = max_of(|s| s.phi_law_half_residual);

    let phi_dot_fd_mismatch = if samples.len() >= 3 && samples.iter().all(|s| s.phi.is_some()) {
        let scale = samples.iter().fold(0.0f64, |a, s| a.max(s.phi_dot.unwrap_or(0.0).abs()));
        let worst = (1..samples.len() - 1).fold(0.0f64, |a, k| {
            let fd = (samples[k + 1].phi.unwrap_or(0.0) - samples[k - 1].phi.unwrap_or(0.0))
                / (samples[k + 1].t - samples[k - 1].t);
            a.max((fd - samples[k].phi_dot.unwrap_or(0.0)).abs())
        });
        Some(if scale > 1e-300 { worst / scale } else { worst })
    } else {
        None
    };
    let mut qs = quantities.to_vec();
    qs.sort();
    qs.dedup();
    Ok(ScalarFlow {
        quantities: qs,
        c,
        samples,
        max_phi_law_residual,
        max_phi_law_half_residual,
        phi_dot_fd_mismatch,
    })
}
