use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{seed_variables, Jet, JetConfig, JetError};
use crate::linalg;
use crate::metric::MetricInstance;
use crate::scalar::{lit, to_f64, Real};
use crate::tensor::{JetTensor, Slot, Symmetry, Tensor};

use Slot::{Lower as L, Upper as U};

/// A point `(x, y)` of the punctured tangent bundle in chart coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointState<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
}

impl<T: Real> PointState<T> {
    pub fn new(x: Vec<T>, y: Vec<T>) -> Self {
        PointState { x, y }
    }

    pub fn from_f64(x: &[f64], y: &[f64]) -> Self {
        PointState {
            x: x.iter().map(|&v| lit(v)).collect(),
            y: y.iter().map(|&v| lit(v)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

pub(crate) fn jsum<T: Real>(mut it: impl Iterator<Item = Jet<T>>) -> Jet<T> {
    let first = it.next().expect("non-empty sum");
    it.fold(first, |acc, j| &acc + &j)
}

/// The spray geometry of a metric expanded around one point: every quantity
/// is a tensor of jets in `(x, y)`, so horizontal and vertical derivatives of
/// anything built from it are exact.
///
/// `F²` is expanded to `order`; each derivative of it lowers the order of the
/// derived quantity by one. The fundamental tensor and the spray are built
/// eagerly, the nonlinear connection and Berwald coefficients whenever the
/// order allows.
pub struct JetGeometry<T: Real> {
    pub n: usize,
    pub order: usize,
    pub point: PointState<T>,
    vars: Vec<Jet<T>>,
    pub f: Jet<T>,
    pub f2: Jet<T>,
    /// `g_ij`
    pub g: JetTensor<T>,
    /// `g^ij`
    pub g_inv: JetTensor<T>,
    /// `y_i = g_ij yʲ`
    pub y_low: JetTensor<T>,
    /// `Gⁱ`
    pub spray: JetTensor<T>,
    /// `Nⁱ_j`
    pub nonlinear: Option<JetTensor<T>>,
    /// `Γⁱ_jk`
    pub gamma: Option<JetTensor<T>>,
}

impl<T: Real> JetGeometry<T> {
    /// Builds the geometry and rejects points where `g` is not positive
    /// definite.
    pub fn new(m: &MetricInstance<T>, p: &PointState<T>, order: usize) -> Result<Self> {
        let geo = Self::new_unchecked(m, p, order)?;
        let min = linalg::symmetric_eigenvalues(&geo.g.value())[0];
        if !(min > T::zero()) {
            return Err(Error::Singular {
                min_eigenvalue: to_f64(min),
            });
        }
        Ok(geo)
    }

    fn new_unchecked(m: &MetricInstance<T>, p: &PointState<T>, order: usize) -> Result<Self> {
        let n = m.dim();
        if p.x.len() != n || p.y.len() != n {
            return Err(Error::InvalidArgument(format!("point must have dimension {n}")));
        }
        if order < 2 {
            return Err(JetError::OrderExceeded {
                needed: 2,
                available: order,
            }
            .into());
        }
        let vars = seed_variables(&p.x, &p.y, JetConfig::new(n, order))?;
        let f = m.eval(&vars[..n], &vars[n..])?;
        let f2 = &f * &f;
        let half = lit::<T>(0.5);
        let dy_f2: Vec<Jet<T>> = (0..n).map(|i| f2.derivative(n + i)).collect::<Result<_, _>>()?;
        let g = Tensor::try_from_fn(n, &[L, L], |i| Ok::<_, Error>(dy_f2[i[0]].derivative(n + i[1])?.scale(half)))?
            .with_symmetry(Symmetry::Symmetric(vec![0, 1]));
        let rows: Vec<Vec<Jet<T>>> = (0..n).map(|i| (0..n).map(|j| g.get(&[i, j]).clone()).collect()).collect();
        let inv = linalg::invert(&rows)?;
        let g_inv = Tensor::from_fn(n, &[U, U], |i| inv[i[0]][i[1]].clone());
        let y_low = Tensor::from_fn(n, &[L], |i| jsum((0..n).map(|j| g.get(&[i[0], j]) * &vars[n + j])));

        // Gⁱ = ¼ g^{il} (∂²F²/∂xᵏ∂yˡ yᵏ − ∂F²/∂xˡ)
        let bracket: Vec<Jet<T>> = (0..n)
            .map(|l| -> Result<Jet<T>> {
                let mixed = jsum(
                    (0..n)
                        .map(|k| Ok(&dy_f2[l].derivative(k)? * &vars[n + k]))
                        .collect::<Result<Vec<_>>>()?
                        .into_iter(),
                );
                Ok(&mixed - &f2.derivative(l)?)
            })
            .collect::<Result<_>>()?;
        let quarter = lit::<T>(0.25);
        let spray = Tensor::from_fn(n, &[U], |i| {
            jsum((0..n).map(|l| g_inv.get(&[i[0], l]) * &bracket[l])).scale(quarter)
        });

        let mut geo = JetGeometry {
            n,
            order,
            point: p.clone(),
            vars,
            f,
            f2,
            g,
            g_inv,
            y_low,
            spray,
            nonlinear: None,
            gamma: None,
        };
        if order >= 3 {
            let nl = geo.vertical(&geo.spray)?;
            if order >= 4 {
                geo.gamma = Some(geo.vertical(&nl)?.with_symmetry(Symmetry::Symmetric(vec![1, 2])));
            }
            geo.nonlinear = Some(nl);
        }
        Ok(geo)
    }

    /// Builds the geometry without the positive-definiteness check.
    pub fn new_allow_indefinite(m: &MetricInstance<T>, p: &PointState<T>, order: usize) -> Result<Self> {
        Self::new_unchecked(m, p, order)
    }

    fn need<'a>(&self, t: &'a Option<JetTensor<T>>, needed: usize) -> Result<&'a JetTensor<T>> {
        t.as_ref().ok_or(Error::Jet(JetError::OrderExceeded {
            needed,
            available: self.order,
        }))
    }

    pub fn nonlinear(&self) -> Result<&JetTensor<T>> {
        self.need(&self.nonlinear, 3)
    }

    pub fn gamma(&self) -> Result<&JetTensor<T>> {
        self.need(&self.gamma, 4)
    }

    /// The coordinate `xⁱ` as a jet.
    pub fn x_var(&self, i: usize) -> &Jet<T> {
        &self.vars[i]
    }

    /// The coordinate `yⁱ` as a jet.
    pub fn y_var(&self, i: usize) -> &Jet<T> {
        &self.vars[self.n + i]
    }

    /// `F` as a rank-0 tensor.
    pub fn f_tensor(&self) -> JetTensor<T> {
        Tensor::from_fn(self.n, &[], |_| self.f.clone())
    }

    /// Appends a lower slot holding `∂/∂yᵐ` (the vertical derivative of the
    /// Berwald connection).
    pub fn vertical(&self, t: &JetTensor<T>) -> Result<JetTensor<T>> {
        let n = self.n;
        let mut valence = t.valence().to_vec();
        valence.push(L);
        Tensor::try_from_fn(n, &valence, |idx| {
            let (head, m) = idx.split_at(idx.len() - 1);
            Ok(t.get(head).derivative(n + m[0])?)
        })
    }

    /// Appends a lower slot holding the partial `∂/∂xˡ`.
    pub fn partial_x(&self, t: &JetTensor<T>) -> Result<JetTensor<T>> {
        let mut valence = t.valence().to_vec();
        valence.push(L);
        Tensor::try_from_fn(self.n, &valence, |idx| {
            let (head, l) = idx.split_at(idx.len() - 1);
            Ok(t.get(head).derivative(l[0])?)
        })
    }

    /// Berwald horizontal derivative `T_{…|l}`, appended as the last slot:
    /// `δ_l T − Σ T_{…m…} Γᵐ_{a l}` over lower slots `+ Σ T^{…m…} Γᵃ_{m l}`
    /// over upper slots, with `δ_l = ∂/∂xˡ − Nᵐ_l ∂/∂yᵐ`.
    pub fn horizontal(&self, t: &JetTensor<T>) -> Result<JetTensor<T>> {
        let n = self.n;
        let nl = self.nonlinear()?;
        let gamma = self.gamma()?;
        let rank = t.rank();
        let valence = t.valence().to_vec();
        let mut out_valence = valence.clone();
        out_valence.push(L);

        let mut dx: Vec<Vec<Jet<T>>> = Vec::with_capacity(t.data().len());
        let mut dy: Vec<Vec<Jet<T>>> = Vec::with_capacity(t.data().len());
        for c in t.data() {
            dx.push((0..n).map(|l| c.derivative(l)).collect::<Result<_, _>>()?);
            dy.push((0..n).map(|m| c.derivative(n + m)).collect::<Result<_, _>>()?);
        }
        Tensor::try_from_fn(n, &out_valence, |idx| -> Result<Jet<T>> {
            let (head, l) = idx.split_at(rank);
            let l = l[0];
            let o = t.offset(head);
            let mut acc = dx[o][l].clone();
            for m in 0..n {
                acc = &acc - &(nl.get(&[m, l]) * &dy[o][m]);
            }
            let mut moved = head.to_vec();
            for (s, slot) in valence.iter().enumerate() {
                let a = head[s];
                for m in 0..n {
                    moved[s] = m;
                    let term = match slot {
                        L => t.get(&moved) * gamma.get(&[m, a, l]),
                        U => -&(t.get(&moved) * gamma.get(&[a, m, l])),
                    };
                    acc = &acc - &term;
                }
                moved[s] = a;
            }
            Ok(acc)
        })
    }

    /// Contraction `T_{…s} yˢ` of the last slot with `y` (upper).
    pub fn contract_y(&self, t: &JetTensor<T>) -> JetTensor<T> {
        let r = t.rank();
        Tensor::from_fn(self.n, &t.valence()[..r - 1], |idx| {
            let mut full = idx.to_vec();
            full.push(0);
            jsum((0..self.n).map(|s| {
                full[r - 1] = s;
                t.get(&full) * self.y_var(s)
            }))
        })
    }

    /// `h_ij = g_ij − y_i y_j / F²`
    pub fn angular(&self) -> Result<JetTensor<T>> {
        let inv_f2 = self.f2.recip()?;
        Ok(Tensor::from_fn(self.n, &[L, L], |i| {
            self.g.get(i) - &(&(self.y_low.get(&[i[0]]) * self.y_low.get(&[i[1]])) * &inv_f2)
        })
        .with_symmetry(Symmetry::Symmetric(vec![0, 1])))
    }

    /// `C_ijk = ½ ∂g_ij/∂yᵏ`
    pub fn cartan(&self) -> Result<JetTensor<T>> {
        let half = lit::<T>(0.5);
        Ok(self
            .vertical(&self.g)?
            .map(|j| j.scale(half))
            .with_symmetry(Symmetry::Symmetric(vec![0, 1, 2])))
    }

    /// Raises all index pairs: `I_k = g^{ij} C_ijk`.
    pub fn mean_cartan(&self, c: &JetTensor<T>) -> JetTensor<T> {
        self.trace_first_two(c)
    }

    /// `g^{ij} T_{ij…}` over the first two slots.
    pub fn trace_first_two(&self, t: &JetTensor<T>) -> JetTensor<T> {
        let n = self.n;
        Tensor::from_fn(n, &t.valence()[2..], |rest| {
            let mut full = vec![0, 0];
            full.extend_from_slice(rest);
            jsum((0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| {
                full[0] = i;
                full[1] = j;
                self.g_inv.get(&[i, j]) * t.get(&full)
            }))
        })
    }

    /// `Bⁱ_jkl = ∂Γⁱ_jk/∂yˡ`
    pub fn berwald(&self) -> Result<JetTensor<T>> {
        Ok(self
            .vertical(self.gamma()?)?
            .with_symmetry(Symmetry::Symmetric(vec![1, 2, 3])))
    }

    /// `E_jk = ½ Bᵐ_jkm`
    pub fn mean_berwald(&self, b: &JetTensor<T>) -> JetTensor<T> {
        let half = lit::<T>(0.5);
        Tensor::from_fn(self.n, &[L, L], |i| {
            jsum((0..self.n).map(|m| b.get(&[m, i[0], i[1], m]).clone())).scale(half)
        })
        .with_symmetry(Symmetry::Symmetric(vec![0, 1]))
    }

    /// `Rⁱ_k = 2∂Gⁱ/∂xᵏ − yʲ∂²Gⁱ/∂xʲ∂yᵏ + 2Gʲ∂²Gⁱ/∂yʲ∂yᵏ − ∂Gⁱ/∂yʲ ∂Gʲ/∂yᵏ`
    pub fn riemann1(&self) -> Result<JetTensor<T>> {
        let n = self.n;
        let two = lit::<T>(2.0);
        let nl = self.nonlinear()?;
        let gamma = self.gamma()?;
        let g_x = self.partial_x(&self.spray)?;
        let n_x = self.partial_x(nl)?;
        Ok(Tensor::from_fn(n, &[U, L], |ik| {
            let (i, k) = (ik[0], ik[1]);
            let mut acc = g_x.get(&[i, k]).scale(two);
            for j in 0..n {
                acc = &acc - &(self.y_var(j) * n_x.get(&[i, k, j]));
                acc = &acc + &(self.spray.get(&[j]) * gamma.get(&[i, j, k])).scale(two);
                acc = &acc - &(nl.get(&[i, j]) * nl.get(&[j, k]));
            }
            acc
        }))
    }

    /// `R_jⁱ_kl = ⅓ ∂/∂yʲ (∂Rⁱ_k/∂yˡ − ∂Rⁱ_l/∂yᵏ)`, stored as `[j][i][k][l]`.
    pub fn riemann(&self, r1: &JetTensor<T>) -> Result<JetTensor<T>> {
        let n = self.n;
        let third = lit::<T>(1.0 / 3.0);
        let r1v = self.vertical(r1)?;
        let anti = Tensor::from_fn(n, &[U, L, L], |i| {
            (r1v.get(&[i[0], i[1], i[2]]) - r1v.get(&[i[0], i[2], i[1]])).scale(third)
        });
        let d = self.vertical(&anti)?;
        Ok(Tensor::from_fn(n, &[L, U, L, L], |i| d.get(&[i[1], i[2], i[3], i[0]]).clone())
            .with_symmetry(Symmetry::Antisymmetric(2, 3)))
    }

    /// `L_ijk = −½ y_m Bᵐ_ijk`
    pub fn landsberg(&self, b: &JetTensor<T>) -> JetTensor<T> {
        let mhalf = lit::<T>(-0.5);
        Tensor::from_fn(self.n, &[L, L, L], |i| {
            jsum((0..self.n).map(|m| self.y_low.get(&[m]) * b.get(&[m, i[0], i[1], i[2]]))).scale(mhalf)
        })
        .with_symmetry(Symmetry::Symmetric(vec![0, 1, 2]))
    }

    /// `Σ_ijkl = 2 (L_ijk|l − L_ijl|k)` from a precomputed `L_ijk|l`.
    pub fn stretch_from(&self, l_h: &JetTensor<T>) -> JetTensor<T> {
        let two = lit::<T>(2.0);
        Tensor::from_fn(self.n, &[L, L, L, L], |i| {
            (l_h.get(i) - l_h.get(&[i[0], i[1], i[3], i[2]])).scale(two)
        })
        .with_symmetry(Symmetry::Antisymmetric(2, 3))
    }

    /// `Σ_jmkl = y_i R_jⁱ_kl·m`.
    pub fn stretch_bianchi(&self, r: &JetTensor<T>) -> Result<JetTensor<T>> {
        let rv = self.vertical(r)?;
        Ok(Tensor::from_fn(self.n, &[L, L, L, L], |i| {
            jsum((0..self.n).map(|s| self.y_low.get(&[s]) * rv.get(&[i[0], s, i[2], i[3], i[1]])))
        }))
    }

    /// Lowers the first (upper) slot of a tensor with `g`.
    pub fn lower_first(&self, t: &JetTensor<T>) -> JetTensor<T> {
        let mut valence = t.valence().to_vec();
        valence[0] = L;
        Tensor::from_fn(self.n, &valence, |idx| {
            let mut j = idx.to_vec();
            jsum((0..self.n).map(|m| {
                j[0] = m;
                self.g.get(&[idx[0], m]) * t.get(&j)
            }))
        })
    }

    /// `Σ T_{a…} S^{a…}` with all slots of `s` raised by `g^{-1}`, for
    /// covariant `t` and `s` of equal rank.
    pub fn inner(&self, t: &JetTensor<T>, s: &JetTensor<T>) -> JetTensor<T> {
        let mut raised = s.clone();
        for slot in 0..s.rank() {
            raised = Tensor::from_fn(self.n, s.valence(), |idx| {
                let mut j = idx.to_vec();
                jsum((0..self.n).map(|m| {
                    j[slot] = m;
                    self.g_inv.get(&[idx[slot], m]) * raised.get(&j)
                }))
            });
        }
        let out = jsum(t.data().iter().zip(raised.data()).map(|(a, b)| a * b));
        Tensor::from_fn(self.n, &[], |_| out.clone())
    }
}
