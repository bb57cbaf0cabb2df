use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{contract_all, h_dot};
use crate::curvature::{JetGeometry, PointState, Tower};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::metric::{unit_vector, MetricInstance};
use crate::scalar::{lit, to_f64, Real, Scalar};
use crate::tensor::{relative_residual, Slot, Tensor, RESIDUAL_FLOOR};

/// Below this max-norm the relative-stretch design tensor counts as zero.
pub const DESIGN_FLOOR: f64 = 1e-9;
/// Below this value of `F·‖I‖` a point counts as Riemannian.
pub const I_FLOOR: f64 = 1e-8;
/// Relative spread under which a fitted ratio counts as constant.
pub const SPREAD_TOL: f64 = 1e-3;

fn dot<T: Real, S: Scalar<T>>(a: &Tensor<S>, b: &Tensor<S>) -> S {
    let mut it = a.data().iter().zip(b.data());
    let (p, q) = it.next().expect("non-empty tensor");
    it.fold(p.mul(q), |acc, (p, q)| acc.add(&p.mul(q)))
}

/// Least-squares ratio `c` minimising `‖Σ − c·D‖²`, i.e. `⟨Σ,D⟩ / ⟨D,D⟩`.
pub fn stretch_ratio<T: Real, S: Scalar<T>>(sigma: &Tensor<S>, design: &Tensor<S>) -> Result<S> {
    Ok(dot(sigma, design).div(&dot(design, design))?)
}

/// Sign convention labels for the fitted ratio.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignLabel {
    /// `c ≤ 0` everywhere sampled.
    RelativelyNonnegative,
    /// `c ≥ 0` everywhere sampled.
    RelativelyNonPositive,
    Indefinite,
}

impl SignLabel {
    pub fn of(cs: &[f64]) -> Self {
        if cs.iter().all(|&c| c <= 0.0) {
            SignLabel::RelativelyNonnegative
        } else if cs.iter().all(|&c| c >= 0.0) {
            SignLabel::RelativelyNonPositive
        } else {
            SignLabel::Indefinite
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SignLabel::RelativelyNonnegative => "relatively nonnegative",
            SignLabel::RelativelyNonPositive => "relatively non-positive",
            SignLabel::Indefinite => "indefinite",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PointFit {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub c: f64,
    /// `‖Σ − cD‖ / ‖Σ‖`
    pub residual: f64,
    /// `c_{|m} yᵐ`
    pub c_prime: f64,
    pub design_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RelativeStretchFit {
    /// Mean of the per-point ratios.
    pub c: f64,
    /// Largest per-point misfit.
    pub residual: f64,
    pub points: Vec<PointFit>,
    /// `max c − min c`
    pub spread: f64,
    /// `spread / max |c|`
    pub relative_spread: f64,
    pub constant: bool,
    pub sign: SignLabel,
    pub sign_label: &'static str,
}

impl RelativeStretchFit {
    fn from_points(points: Vec<PointFit>, tol: f64) -> Self {
        let cs: Vec<f64> = points.iter().map(|p| p.c).collect();
        let (lo, hi) = cs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &c| (a.min(c), b.max(c)));
        let spread = hi - lo;
        let scale = cs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let relative_spread = if scale > 0.0 { spread / scale } else { spread };
        let sign = SignLabel::of(&cs);
        RelativeStretchFit {
            c: cs.iter().sum::<f64>() / cs.len() as f64,
            residual: points.iter().fold(0.0f64, |m, p| m.max(p.residual)),
            points,
            spread,
            relative_spread,
            constant: relative_spread <= tol,
            sign,
            sign_label: sign.label(),
        }
    }
}

/// The ratio as a jet, its misfit and the design norm at the tower's point.
pub(crate) fn relative_stretch_jet<T: Real>(tower: &Tower<T>) -> Result<(Jet<T>, f64, f64)> {
    let design = tower.relative_design();
    let dv = design.value();
    let design_norm = to_f64(dv.max_abs());
    if !(design_norm > DESIGN_FLOOR) {
        return Err(Error::UndefinedFit(format!(
            "design tensor F(C_ijk|l − C_ijl|k) vanishes (max {design_norm:.3e})"
        )));
    }
    let num = contract_all(&tower.sigma, &design);
    let den = contract_all(&design, &design);
    let c = num.div(&den)?;
    let sv = tower.sigma.value();
    let fitted = dv.scale(c.value());
    let residual = to_f64(relative_residual(&sv, &fitted, lit(RESIDUAL_FLOOR)));
    Ok((c, residual, design_norm))
}

fn point_fit<T: Real>(m: &MetricInstance<T>, p: &PointState<T>) -> Result<PointFit> {
    let tower = Tower::build(m, p)?;
    let (c, residual, design_norm) = relative_stretch_jet(&tower)?;
    let c_prime = h_dot(&tower.geo, &c)?.value();
    Ok(PointFit {
        x: p.x.iter().map(|&v| to_f64(v)).collect(),
        y: p.y.iter().map(|&v| to_f64(v)).collect(),
        c: to_f64(c.value()),
        residual,
        c_prime: to_f64(c_prime),
        design_norm,
    })
}

/// Fits `Σ_ijkl = c F (C_ijk|l − C_ijl|k)` at one point.
pub fn fit_relative_stretch<T: Real>(m: &MetricInstance<T>, p: &PointState<T>) -> Result<RelativeStretchFit> {
    Ok(RelativeStretchFit::from_points(vec![point_fit(m, p)?], SPREAD_TOL))
}

/// Fits the ratio at every point and summarises its spread; `tol` is the
/// relative spread below which `c` is declared constant.
pub fn fit_relative_stretch_points<T: Real>(
    m: &MetricInstance<T>,
    points: &[PointState<T>],
    tol: f64,
) -> Result<RelativeStretchFit> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("no points to fit".into()));
    }
    let fits: Vec<Result<PointFit>> = points.par_iter().map(|p| point_fit(m, p)).collect();
    Ok(RelativeStretchFit::from_points(fits.into_iter().collect::<Result<_>>()?, tol))
}

#[derive(Clone, Debug, Serialize)]
pub struct RelativeStretchSurvey {
    pub fit: RelativeStretchFit,
    /// Largest spread of `c` over the directions at one base point.
    pub fiber_spread: f64,
    /// `c` independent of `y` within tolerance.
    pub isotropic: bool,
    /// `c` independent of `(x, y)` within tolerance.
    pub constant: bool,
    pub tolerance: f64,
}

/// Samples `bases` chart points and `directions` unit directions at each,
/// and decides whether `c` is isotropic (`c = c(x)`) and constant.
pub fn survey_relative_stretch<T: Real>(
    m: &MetricInstance<T>,
    bases: usize,
    directions: usize,
    seed: u64,
    tol: f64,
) -> Result<RelativeStretchSurvey> {
    let n = m.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::new();
    for _ in 0..bases.max(1) {
        let x = m.chart().sample(n, &mut rng);
        for _ in 0..directions.max(1) {
            points.push(PointState::<T>::from_f64(&x, &unit_vector(n, &mut rng)));
        }
    }
    let fit = fit_relative_stretch_points(m, &points, tol)?;
    let scale = fit.points.iter().fold(0.0f64, |a, p| a.max(p.c.abs())).max(f64::MIN_POSITIVE);
    let fiber_spread = fit
        .points
        .chunks(directions.max(1))
        .map(|ch| {
            let lo = ch.iter().fold(f64::INFINITY, |a, p| a.min(p.c));
            let hi = ch.iter().fold(f64::NEG_INFINITY, |a, p| a.max(p.c));
            hi - lo
        })
        .fold(0.0, f64::max);
    Ok(RelativeStretchSurvey {
        isotropic: fiber_spread / scale <= tol,
        constant: fit.relative_spread <= tol,
        fit,
        fiber_spread,
        tolerance: tol,
    })
}

/// Pieces of the semi-C-reducible model
/// `C = p·A + (1 − p)·B` with
/// `A_jlm = (I_l h_jm + I_j h_lm + I_m h_jl) / (n + 1)` and
/// `B_jlm = I_j I_l I_m / ‖I‖²`.
pub struct SemiCParts<S> {
    pub p: S,
    pub i_norm2: S,
    pub a: Tensor<S>,
    pub b: Tensor<S>,
}

/// Least-squares `p` for a Cartan tensor `c` with mean `i` (lower), angular
/// metric `h` and inverse metric `g_inv`.
pub fn semi_c_parts<T: Real, S: Scalar<T>>(
    c: &Tensor<S>,
    i: &Tensor<S>,
    h: &Tensor<S>,
    g_inv: &Tensor<S>,
) -> Result<SemiCParts<S>> {
    let n = c.dim();
    let zero = c.data()[0].constant_like(T::zero());
    let mut i_norm2 = zero.clone();
    for a in 0..n {
        for b in 0..n {
            i_norm2 = i_norm2.add(&g_inv.get(&[a, b]).mul(i.get(&[a])).mul(i.get(&[b])));
        }
    }
    let inv_n1 = lit::<T>(1.0 / (n as f64 + 1.0));
    let a = Tensor::from_fn(n, &[Slot::Lower; 3], |x| {
        let (j, l, m) = (x[0], x[1], x[2]);
        i.get(&[l])
            .mul(h.get(&[j, m]))
            .add(&i.get(&[j]).mul(h.get(&[l, m])))
            .add(&i.get(&[m]).mul(h.get(&[j, l])))
            .scale(inv_n1)
    });
    let inv = zero.constant_like(T::one()).div(&i_norm2)?;
    let b = Tensor::from_fn(n, &[Slot::Lower; 3], |x| {
        i.get(&[x[0]]).mul(i.get(&[x[1]])).mul(i.get(&[x[2]])).mul(&inv)
    });
    let target = Tensor::from_fn(n, &[Slot::Lower; 3], |x| c.get(x).sub(b.get(x)));
    let design = Tensor::from_fn(n, &[Slot::Lower; 3], |x| a.get(x).sub(b.get(x)));
    let p = dot(&target, &design).div(&dot(&design, &design))?;
    Ok(SemiCParts { p, i_norm2, a, b })
}

#[derive(Clone, Debug, Serialize)]
pub struct SemiCFit {
    pub p: f64,
    /// `1 − p`
    pub q: f64,
    /// `‖C − pA − qB‖ / ‖C‖`
    pub residual: f64,
    /// `g^{ij} I_i I_j`
    pub i_norm2: f64,
    /// `p_{|m} yᵐ`
    pub p_prime: f64,
}

/// Fits the characteristic scalar `p` of the semi-C-reducible form at `p`.
pub fn fit_semi_c_reducible<T: Real>(m: &MetricInstance<T>, p: &PointState<T>) -> Result<SemiCFit> {
    let n = m.dim();
    if n < 3 {
        return Err(Error::DimensionError {
            required: "n >= 3",
            found: n,
        });
    }
    let geo = JetGeometry::new(m, p, 5)?;
    semi_c_at(&geo)
}

pub(crate) fn semi_c_at<T: Real>(geo: &JetGeometry<T>) -> Result<SemiCFit> {
    let c = geo.cartan()?;
    let i = geo.mean_cartan(&c);
    let h = geo.angular()?;
    let i_norm2 = {
        let iv = i.value();
        let gi = geo.g_inv.value();
        let mut s = T::zero();
        for a in 0..geo.n {
            for b in 0..geo.n {
                s = s + *gi.get(&[a, b]) * *iv.get(&[a]) * *iv.get(&[b]);
            }
        }
        s
    };
    let scaled = to_f64(i_norm2.max(T::zero()).sqrt() * geo.f.value());
    if !(scaled > I_FLOOR) {
        return Err(Error::RiemannianPoint { norm: scaled });
    }
    let parts = semi_c_parts(&c, &i, &h, &geo.g_inv)?;
    let pv = parts.p.value();
    let cv = c.value();
    let model = Tensor::from_fn(geo.n, &[Slot::Lower; 3], |x| {
        pv * parts.a.get(x).value() + (T::one() - pv) * parts.b.get(x).value()
    });
    let residual = to_f64(relative_residual(&cv, &model, lit(RESIDUAL_FLOOR)));
    let p_prime = h_dot(geo, &parts.p)?.value();
    let p = to_f64(pv);
    Ok(SemiCFit {
        p,
        q: 1.0 - p,
        residual,
        i_norm2: to_f64(i_norm2),
        p_prime: to_f64(p_prime),
    })
}
