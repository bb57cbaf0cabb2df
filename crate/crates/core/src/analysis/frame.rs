use serde::Serialize;

use super::{h_dot, I_FLOOR};
use crate::curvature::{jsum, JetGeometry, PointState};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::metric::MetricInstance;
use crate::scalar::{lit, to_f64, Real};
use crate::tensor::{relative_residual, JetTensor, Slot, Tensor, RESIDUAL_FLOOR};

/// The Berwald frame `(ℓ, m)` of a two-dimensional metric at a point, with
/// the principal scalar and its derived ratios.
#[derive(Clone, Debug, Serialize)]
pub struct BerwaldFrame2D {
    pub f: f64,
    /// `ℓ = y / F`
    pub ell: Vec<f64>,
    /// The `g`-unit vector orthogonal to `ℓ` with `det[ℓ m] > 0`.
    pub m: Vec<f64>,
    /// `I = F C_ijk mⁱ mʲ mᵏ`
    pub i_scalar: f64,
    /// `I_{|i} ℓⁱ / I`, absent where `I` vanishes.
    pub mu: Option<f64>,
    /// `μ_{|s} yˢ`
    pub mu_prime: Option<f64>,
    /// `F I_{·i} mⁱ`
    pub i_vert: f64,
    /// Largest deviation of `g(ℓ,ℓ), g(m,m), g(ℓ,m)` from `1, 1, 0`.
    pub orthonormality: f64,
    /// `‖C − F⁻¹ I m⊗m⊗m‖ / ‖C‖`
    pub reconstruction: f64,
    /// `‖L − μ F C‖ / ‖L‖`, where `μ` is defined.
    pub landsberg_residual: Option<f64>,
}

impl BerwaldFrame2D {
    pub fn mu(&self) -> Result<f64> {
        self.mu.ok_or(Error::RiemannianPoint {
            norm: self.i_scalar.abs(),
        })
    }
}

pub(crate) struct FrameJets<T: Real> {
    pub ell: Vec<Jet<T>>,
    pub m: Vec<Jet<T>>,
    pub m_low: Vec<Jet<T>>,
    pub i_scalar: Jet<T>,
}

pub(crate) fn frame_jets<T: Real>(geo: &JetGeometry<T>, c: &JetTensor<T>) -> Result<FrameJets<T>> {
    let inv_f = geo.f.recip()?;
    let ell: Vec<Jet<T>> = (0..2).map(|i| geo.y_var(i) * &inv_f).collect();
    let ell_low: Vec<Jet<T>> = (0..2).map(|i| geo.y_low.get(&[i]) * &inv_f).collect();
    let g = |i: usize, j: usize| geo.g.get(&[i, j]);
    let det = &(g(0, 0) * g(1, 1)) - &(g(0, 1) * g(1, 0));
    let inv_sqrt = det.sqrt()?.recip()?;
    let m = vec![-&(&ell_low[1] * &inv_sqrt), &ell_low[0] * &inv_sqrt];
    let m_low: Vec<Jet<T>> = (0..2).map(|i| jsum((0..2).map(|j| g(i, j) * &m[j]))).collect();
    let mut ccc = None;
    for a in 0..2 {
        for b in 0..2 {
            for d in 0..2 {
                let t = &(&(c.get(&[a, b, d]) * &m[a]) * &m[b]) * &m[d];
                ccc = Some(match ccc {
                    None => t,
                    Some(acc) => &acc + &t,
                });
            }
        }
    }
    let i_scalar = &geo.f * &ccc.expect("n = 2");
    Ok(FrameJets {
        ell,
        m,
        m_low,
        i_scalar,
    })
}

/// The ratio `μ = I_{|i} ℓⁱ / I` as a jet.
pub(crate) fn mu_jet<T: Real>(geo: &JetGeometry<T>, fr: &FrameJets<T>) -> Result<Jet<T>> {
    let it = Tensor::from_fn(2, &[], |_| fr.i_scalar.clone());
    let ih = geo.horizontal(&it)?;
    let along = &(ih.get(&[0]) * &fr.ell[0]) + &(ih.get(&[1]) * &fr.ell[1]);
    Ok(along.div(&fr.i_scalar)?)
}

/// Builds the Berwald frame at `p` for a two-dimensional metric.
pub fn berwald_frame<T: Real>(m: &MetricInstance<T>, p: &PointState<T>) -> Result<BerwaldFrame2D> {
    let n = m.dim();
    if n != 2 {
        return Err(Error::DimensionError {
            required: "n = 2",
            found: n,
        });
    }
    let geo = JetGeometry::new(m, p, 5)?;
    let c = geo.cartan()?;
    let fr = frame_jets(&geo, &c)?;
    let f = geo.f.value();
    let gv = geo.g.value();
    let v = |js: &[Jet<T>]| js.iter().map(Jet::value).collect::<Vec<T>>();
    let (ell, mm) = (v(&fr.ell), v(&fr.m));
    let gq = |a: &[T], b: &[T]| -> T {
        let mut s = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                s = s + *gv.get(&[i, j]) * a[i] * b[j];
            }
        }
        s
    };
    let orthonormality = to_f64(
        (gq(&ell, &ell) - T::one())
            .abs()
            .max((gq(&mm, &mm) - T::one()).abs())
            .max(gq(&ell, &mm).abs()),
    );
    let i_scalar = fr.i_scalar.value();
    let m_low = v(&fr.m_low);
    let cv = c.value();
    let model = Tensor::from_fn(2, &[Slot::Lower; 3], |x| i_scalar / f * m_low[x[0]] * m_low[x[1]] * m_low[x[2]]);
    let floor = lit::<T>(RESIDUAL_FLOOR);
    let reconstruction = to_f64(relative_residual(&cv, &model, floor));
    let i_vert = {
        let d0 = fr.i_scalar.derivative(2)?.value();
        let d1 = fr.i_scalar.derivative(3)?.value();
        f * (d0 * mm[0] + d1 * mm[1])
    };

    let (mu, mu_prime, landsberg_residual) = if to_f64(i_scalar.abs()) > I_FLOOR {
        let mu = mu_jet(&geo, &fr)?;
        let mu_prime = h_dot(&geo, &mu)?.value();
        let l = geo.landsberg(&geo.berwald()?).value();
        let muf = mu.value() * f;
        let rhs = cv.scale(muf);
        let res = relative_residual(&l, &rhs, floor);
        (Some(to_f64(mu.value())), Some(to_f64(mu_prime)), Some(to_f64(res)))
    } else {
        (None, None, None)
    };
    Ok(BerwaldFrame2D {
        f: to_f64(f),
        ell: ell.iter().map(|&a| to_f64(a)).collect(),
        m: mm.iter().map(|&a| to_f64(a)).collect(),
        i_scalar: to_f64(i_scalar),
        mu,
        mu_prime,
        i_vert: to_f64(i_vert),
        orthonormality,
        reconstruction,
        landsberg_residual,
    })
}
