//! The curvature tower of a Finsler metric at a point `(x, y)`.
//!
//! Everything is derived from jets of `F²`: the fundamental tensor, Cartan
//! torsion, the spray and its Berwald connection, the Berwald, Riemann,
//! Landsberg and stretch curvatures, and flag curvature. Quantities with two
//! defining formulas are computed both ways and the discrepancy is kept.

mod geometry;


use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::DEFAULT_ORDER;
use crate::metric::MetricInstance;
use crate::scalar::{lit, to_f64, Real};
use crate::tensor::{relative_residual, JetTensor, Slot, Tensor, TensorBlock, RESIDUAL_FLOOR};

pub use geometry::{JetGeometry, PointState};
pub(crate) use geometry::jsum;

/// Default tolerance for identity residuals.
pub const IDENTITY_TOL: f64 = 1e-6;

fn floor<T: Real>() -> T {
    lit(RESIDUAL_FLOOR)
}

/// Relative residual of two jet tensors at the expansion point.
pub fn value_residual<T: Real>(a: &JetTensor<T>, b: &JetTensor<T>) -> T {
    relative_residual(&a.value(), &b.value(), floor())
}

#[derive(Clone, Debug, Serialize)]
pub struct Fundamental<T: Real> {
    pub f: T,
    pub g: TensorBlock<T>,
    pub g_inv: TensorBlock<T>,
    pub h: TensorBlock<T>,
}

/// `g`, `g⁻¹`, the angular metric `h` and `F` at `p`. Fails with
/// [`Error::Singular`] when `g` is not positive definite.
pub fn fundamental_tensor<T: Real>(m: &MetricInstance<T>, p: &PointState<T>) -> Result<Fundamental<T>> {
    let geo = JetGeometry::new(m, p, 2)?;
    Ok(Fundamental {
        f: geo.f.value(),
        g: geo.g.value(),
        g_inv: geo.g_inv.value(),
        h: geo.angular()?.value(),
    })
}

/// `g_ij` at `p` without any definiteness check.
pub fn metric_tensor<T: Real>(m: &MetricInstance<T>, p: &PointState<T>) -> Result<TensorBlock<T>> {
    Ok(JetGeometry::new_allow_indefinite(m, p, 2)?.g.value())
}

/// Cartan torsion `C_ijk` and mean Cartan torsion `I_k`.
pub fn cartan_tensor<T: Real>(m: &MetricInstance<T>, p: &PointState<T>) -> Result<(TensorBlock<T>, TensorBlock<T>)> {
    let geo = JetGeometry::new(m, p, 3)?;
    let c = geo.cartan()?;
    let i = geo.mean_cartan(&c);
    Ok((c.value(), i.value()))
}

#[derive(Clone, Debug, Serialize)]
pub struct SprayData<T: Real> {
    /// `Gⁱ`
    pub g: TensorBlock<T>,
    /// `Nⁱ_j`
    pub n: TensorBlock<T>,
    /// `Γⁱ_jk`
    pub gamma: TensorBlock<T>,
}

pub fn spray<T: Real>(m: &MetricInstance<T>, p: &PointState<T>) -> Result<SprayData<T>> {
    let geo = JetGeometry::new(m, p, 4)?;
    Ok(SprayData {
        g: geo.spray.value(),
        n: geo.nonlinear()?.value(),
        gamma: geo.gamma()?.value(),
    })
}

/// Berwald curvature `Bⁱ_jkl` and mean Berwald curvature `E_jk`.
pub fn berwald_curvature<T: Real>(
    m: &MetricInstance<T>,
    p: &PointState<T>,
) -> Result<(TensorBlock<T>, TensorBlock<T>)> {
    let geo = JetGeometry::new(m, p, 5)?;
    let b = geo.berwald()?;
    let e = geo.mean_berwald(&b);
    Ok((b.value(), e.value()))
}

/// Riemann curvature `Rⁱ_k` and the hh-curvature `R_jⁱ_kl` (`[j][i][k][l]`).
pub fn riemann_curvature<T: Real>(
    m: &MetricInstance<T>,
    p: &PointState<T>,
) -> Result<(TensorBlock<T>, TensorBlock<T>)> {
    let geo = JetGeometry::new(m, p, 6)?;
    let r1 = geo.riemann1()?;
    let r = geo.riemann(&r1)?;
    Ok((r1.value(), r.value()))
}

/// Horizontal derivative of the tensor produced by `field`, which is
/// evaluated on a geometry expanded to `order` around `p`. The result gains
/// one trailing lower slot.
pub fn horizontal_derivative<T: Real, F>(
    m: &MetricInstance<T>,
    p: &PointState<T>,
    order: usize,
    field: F,
) -> Result<TensorBlock<T>>
where
    F: Fn(&JetGeometry<T>) -> Result<JetTensor<T>>,
{
    let geo = JetGeometry::new(m, p, order)?;
    let t = field(&geo)?;
    Ok(geo.horizontal(&t)?.value())
}

#[derive(Clone, Debug, Serialize)]
pub struct RouteCheck<T: Real> {
    pub value: TensorBlock<T>,
    /// Relative discrepancy between the two defining formulas.
    pub residual: T,
}

fn cross_check<T: Real>(what: &'static str, value: TensorBlock<T>, residual: T, tol: f64) -> Result<RouteCheck<T>> {
    if to_f64(residual) > tol || residual.is_nan() {
        return Err(Error::CrossCheckFailure {
            what,
            residual: to_f64(residual),
            tolerance: tol,
        });
    }
    Ok(RouteCheck { value, residual })
}

/// Landsberg curvature by `−½ y_m Bᵐ_ijk`, cross-checked against `C_ijk|s yˢ`.
pub fn landsberg_tensor<T: Real>(m: &MetricInstance<T>, p: &PointState<T>) -> Result<RouteCheck<T>> {
    let geo = JetGeometry::new(m, p, 5)?;
    let l = geo.landsberg(&geo.berwald()?);
    let c = geo.cartan()?;
    let l2 = geo.contract_y(&geo.horizontal(&c)?);
    cross_check("landsberg", l.value(), value_residual(&l, &l2), IDENTITY_TOL)
}

/// Mean Landsberg curvature by `g^{kl} L_ikl`, cross-checked against `I_i|s yˢ`.
pub fn mean_landsberg<T: Real>(m: &MetricInstance<T>, p: &PointState<T>) -> Result<RouteCheck<T>> {
    let geo = JetGeometry::new(m, p, 5)?;
    let j = geo.trace_first_two(&geo.landsberg(&geo.berwald()?));
    let i = geo.mean_cartan(&geo.cartan()?);
    let j2 = geo.contract_y(&geo.horizontal(&i)?);
    cross_check("mean landsberg", j.value(), value_residual(&j, &j2), IDENTITY_TOL)
}

/// Stretch curvature `2(L_ijk|l − L_ijl|k)`, cross-checked against
/// `y_i R_jⁱ_kl·m`.
pub fn stretch_tensor<T: Real>(m: &MetricInstance<T>, p: &PointState<T>) -> Result<RouteCheck<T>> {
    let geo = JetGeometry::new(m, p, DEFAULT_ORDER)?;
    let l = geo.landsberg(&geo.berwald()?);
    let sigma = geo.stretch_from(&geo.horizontal(&l)?);
    let r = geo.riemann(&geo.riemann1()?)?;
    let sigma2 = geo.stretch_bianchi(&r)?;
    cross_check("stretch", sigma.value(), value_residual(&sigma, &sigma2), 1e-5)
}

/// `g_y(u, R_y u) / (g_y(y,y) g_y(u,u) − g_y(y,u)²)`.
pub fn flag_curvature<T: Real>(m: &MetricInstance<T>, p: &PointState<T>, u: &[T]) -> Result<T> {
    let geo = JetGeometry::new(m, p, 4)?;
    let r1 = geo.riemann1()?.value();
    flag_from(&geo.g.value(), &r1, &p.y, u)
}

pub(crate) fn flag_from<T: Real>(g: &TensorBlock<T>, r1: &TensorBlock<T>, y: &[T], u: &[T]) -> Result<T> {
    let n = y.len();
    if u.len() != n {
        return Err(Error::InvalidArgument("flag vector has the wrong dimension".into()));
    }
    let gq = |a: &[T], b: &[T]| -> T {
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                s = s + *g.get(&[i, j]) * a[i] * b[j];
            }
        }
        s
    };
    let ru: Vec<T> = (0..n)
        .map(|i| (0..n).map(|k| *r1.get(&[i, k]) * u[k]).sum())
        .collect();
    let (yy, uu, yu) = (gq(y, y), gq(u, u), gq(y, u));
    let den = yy * uu - yu * yu;
    if !(den > lit::<T>(1e-12) * yy * uu) {
        return Err(Error::DegenerateFlag);
    }
    Ok(gq(u, &ru) / den)
}

/// Residuals of the identities the engine checks at every point.
#[derive(Clone, Debug, Default, Serialize)]
pub struct IdentityResiduals {
    /// `L` by Berwald contraction vs `C_ijk|s yˢ`.
    pub landsberg_routes: f64,
    /// `J` by trace vs `I_i|s yˢ`.
    pub mean_landsberg_routes: f64,
    /// `Σ` by definition vs `y_i R_jⁱ_kl·m`.
    pub stretch_routes: f64,
    /// `R_jⁱ_kl·m = Bⁱ_jml|k − Bⁱ_jmk|l`.
    pub bianchi_first: f64,
    /// `Bⁱ_jkl·m = Bⁱ_jkm·l`.
    pub bianchi_second: f64,
    /// `g_ij|k = −2 L_ijk`.
    pub metric_horizontal: f64,
    /// `g_ij·k = 2 C_ijk`.
    pub metric_vertical: f64,
    /// `F_|l = 0`, relative to `F`.
    pub f_horizontal: f64,
    /// `yⁱ_|l = 0`, relative to `|y|`.
    pub y_horizontal: f64,
    /// `Σ_ijkl + Σ_ijlk = 0`.
    pub stretch_antisymmetry: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        [
            self.landsberg_routes,
            self.mean_landsberg_routes,
            self.stretch_routes,
            self.bianchi_first,
            self.bianchi_second,
            self.metric_horizontal,
            self.metric_vertical,
            self.f_horizontal,
            self.y_horizontal,
            self.stretch_antisymmetry,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Every tensor of the tower as jets around one point.
pub struct Tower<T: Real> {
    pub geo: JetGeometry<T>,
    pub h: JetTensor<T>,
    pub c: JetTensor<T>,
    pub i: JetTensor<T>,
    pub c_h: JetTensor<T>,
    pub i_h: JetTensor<T>,
    pub b: JetTensor<T>,
    pub e: JetTensor<T>,
    pub r1: JetTensor<T>,
    pub r: JetTensor<T>,
    pub l: JetTensor<T>,
    pub l_h: JetTensor<T>,
    pub j: JetTensor<T>,
    pub sigma: JetTensor<T>,
    pub sigma_bianchi: JetTensor<T>,
}

impl<T: Real> Tower<T> {
    pub fn build(m: &MetricInstance<T>, p: &PointState<T>) -> Result<Self> {
        Self::from_geometry(JetGeometry::new(m, p, DEFAULT_ORDER)?)
    }

    pub fn from_geometry(geo: JetGeometry<T>) -> Result<Self> {
        let h = geo.angular()?;
        let c = geo.cartan()?;
        let i = geo.mean_cartan(&c);
        let c_h = geo.horizontal(&c)?;
        let i_h = geo.horizontal(&i)?;
        let b = geo.berwald()?;
        let e = geo.mean_berwald(&b);
        let r1 = geo.riemann1()?;
        let r = geo.riemann(&r1)?;
        let l = geo.landsberg(&b);
        let l_h = geo.horizontal(&l)?;
        let j = geo.trace_first_two(&l);
        let sigma = geo.stretch_from(&l_h);
        let sigma_bianchi = geo.stretch_bianchi(&r)?;
        Ok(Tower {
            geo,
            h,
            c,
            i,
            c_h,
            i_h,
            b,
            e,
            r1,
            r,
            l,
            l_h,
            j,
            sigma,
            sigma_bianchi,
        })
    }

    /// `F (C_ijk|l − C_ijl|k)`, the design tensor of the relative-stretch fit.
    pub fn relative_design(&self) -> JetTensor<T> {
        let f = &self.geo.f;
        Tensor::from_fn(self.geo.n, &[Slot::Lower; 4], |i| {
            f * &(self.c_h.get(i) - self.c_h.get(&[i[0], i[1], i[3], i[2]]))
        })
    }

    pub fn identities(&self) -> Result<IdentityResiduals> {
        let geo = &self.geo;
        let n = geo.n;
        let fl = floor::<T>();
        let res = |a: &JetTensor<T>, b: &JetTensor<T>| to_f64(value_residual(a, b));

        let l2 = geo.contract_y(&self.c_h);
        let j2 = geo.contract_y(&self.i_h);

        let rv = geo.vertical(&self.r)?.value();
        let bh = geo.horizontal(&self.b)?.value();
        let rhs = Tensor::from_fn(n, &[Slot::Lower, Slot::Upper, Slot::Lower, Slot::Lower, Slot::Lower], |x| {
            let (j, i, k, l, m) = (x[0], x[1], x[2], x[3], x[4]);
            *bh.get(&[i, j, m, l, k]) - *bh.get(&[i, j, m, k, l])
        });
        let bianchi_first = relative_residual(&rv, &rhs, fl);

        let bv = geo.vertical(&self.b)?.value();
        let bv_swapped = Tensor::from_fn(n, bv.valence(), |x| *bv.get(&[x[0], x[1], x[2], x[4], x[3]]));
        let bianchi_second = relative_residual(&bv, &bv_swapped, fl);

        let gh = geo.horizontal(&geo.g)?;
        let m2l = self.l.map(|j| j.scale(lit(-2.0)));
        let gv = geo.vertical(&geo.g)?;
        let c2 = self.c.map(|j| j.scale(lit(2.0)));

        let fh = geo.horizontal(&geo.f_tensor())?.value();
        let ytensor = Tensor::from_fn(n, &[Slot::Upper], |i| geo.y_var(i[0]).clone());
        let yh = geo.horizontal(&ytensor)?.value();
        let ynorm = geo.point.y.iter().fold(T::zero(), |a, v| a.max(v.abs()));

        let sig = self.sigma.value();
        let sig_t = Tensor::from_fn(n, sig.valence(), |x| -*sig.get(&[x[0], x[1], x[3], x[2]]));

        Ok(IdentityResiduals {
            landsberg_routes: res(&self.l, &l2),
            mean_landsberg_routes: res(&self.j, &j2),
            stretch_routes: res(&self.sigma, &self.sigma_bianchi),
            bianchi_first: to_f64(bianchi_first),
            bianchi_second: to_f64(bianchi_second),
            metric_horizontal: res(&gh, &m2l),
            metric_vertical: res(&gv, &c2),
            f_horizontal: to_f64(fh.max_abs() / geo.f.value()),
            y_horizontal: to_f64(yh.max_abs() / ynorm),
            stretch_antisymmetry: to_f64(relative_residual(&sig, &sig_t, fl)),
        })
    }

    pub fn bundle(&self) -> Result<CurvatureBundle<T>> {
        let v = |t: &JetTensor<T>| t.value();
        Ok(CurvatureBundle {
            point: self.geo.point.clone(),
            f: self.geo.f.value(),
            g: v(&self.geo.g),
            g_inv: v(&self.geo.g_inv),
            h: v(&self.h),
            c: v(&self.c),
            i: v(&self.i),
            spray: v(&self.geo.spray),
            n: v(self.geo.nonlinear()?),
            gamma: v(self.geo.gamma()?),
            b: v(&self.b),
            e: v(&self.e),
            r1: v(&self.r1),
            r: v(&self.r),
            l: v(&self.l),
            j: v(&self.j),
            sigma: v(&self.sigma),
            residuals: self.identities()?,
        })
    }
}

/// All tensors at one point, evaluated.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureBundle<T: Real> {
    pub point: PointState<T>,
    pub f: T,
    pub g: TensorBlock<T>,
    pub g_inv: TensorBlock<T>,
    pub h: TensorBlock<T>,
    pub c: TensorBlock<T>,
    pub i: TensorBlock<T>,
    pub spray: TensorBlock<T>,
    pub n: TensorBlock<T>,
    pub gamma: TensorBlock<T>,
    pub b: TensorBlock<T>,
    pub e: TensorBlock<T>,
    pub r1: TensorBlock<T>,
    /// `R_jⁱ_kl` stored as `[j][i][k][l]`.
    pub r: TensorBlock<T>,
    pub l: TensorBlock<T>,
    pub j: TensorBlock<T>,
    pub sigma: TensorBlock<T>,
    pub residuals: IdentityResiduals,
}

impl<T: Real> CurvatureBundle<T> {
    pub fn compute(m: &MetricInstance<T>, p: &PointState<T>) -> Result<Self> {
        Tower::build(m, p)?.bundle()
    }

    /// Max-norms of every tensor, keyed by name.
    pub fn norms(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("g", to_f64(self.g.max_abs())),
            ("h", to_f64(self.h.max_abs())),
            ("C", to_f64(self.c.max_abs())),
            ("I", to_f64(self.i.max_abs())),
            ("G", to_f64(self.spray.max_abs())),
            ("N", to_f64(self.n.max_abs())),
            ("Gamma", to_f64(self.gamma.max_abs())),
            ("B", to_f64(self.b.max_abs())),
            ("E", to_f64(self.e.max_abs())),
            ("R1", to_f64(self.r1.max_abs())),
            ("R", to_f64(self.r.max_abs())),
            ("L", to_f64(self.l.max_abs())),
            ("J", to_f64(self.j.max_abs())),
            ("Sigma", to_f64(self.sigma.max_abs())),
        ]
    }
}
