//! Truncated multivariate Taylor expansions ("jets").
//!
//! A [`Jet`] stores the Taylor coefficients `∂^α f / α!` of a scalar function
//! of `nvars` variables around an expansion point, for every multi-index with
//! `|α| ≤ order`. Arithmetic is truncated at the smaller order of the operands,
//! and [`Jet::derivative`] lowers the order by one, so chains of derivative
//! formulas keep an exact account of how much information is left.

mod space;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::scalar::{lit, Real};

pub use space::JetSpace;

/// Default truncation order. Seven levels are needed by the Bianchi route to
/// the stretch tensor, which differentiates the spray five times in `y`
/// and twice more for the Riemann tensor.
pub const DEFAULT_ORDER: usize = 7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("tangent vector y is zero (point not in the punctured tangent bundle)")]
    ZeroVector,
    #[error("bad jet configuration: {0}")]
    BadConfig(String),
    #[error("division by a jet with zero value")]
    DivisionByZero,
    #[error("jets do not share variable count and order ({0})")]
    ShapeMismatch(String),
    #[error("{func} evaluated outside its domain at {value}")]
    Domain { func: &'static str, value: f64 },
    #[error("derivative order {needed} exceeds available jet order {available}")]
    OrderExceeded { needed: usize, available: usize },
}

/// Exponent vector of a monomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MultiIndex(Vec<u8>);

impl MultiIndex {
    pub fn new(exponents: Vec<u8>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(nvars: usize) -> Self {
        MultiIndex(vec![0; nvars])
    }

    /// Unit multi-index for the given variable slots, counted with multiplicity.
    pub fn from_vars(nvars: usize, vars: &[usize]) -> Self {
        let mut e = vec![0u8; nvars];
        for &v in vars {
            e[v] += 1;
        }
        MultiIndex(e)
    }

    pub fn exponents(&self) -> &[u8] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    /// `α! = Π α_i!`
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&e| (1..=e as u64).product::<u64>() as f64)
            .product()
    }
}

/// Manifold dimension and truncation order for a jet computation in the
/// `2n` coordinates `(x¹..xⁿ, y¹..yⁿ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct JetConfig {
    pub n: usize,
    pub order: usize,
}

impl JetConfig {
    pub fn new(n: usize, order: usize) -> Self {
        JetConfig { n, order }
    }

    pub fn nvars(&self) -> usize {
        2 * self.n
    }
}

impl Default for JetConfig {
    fn default() -> Self {
        JetConfig {
            n: 2,
            order: DEFAULT_ORDER,
        }
    }
}

#[derive(Clone)]
pub struct Jet<T> {
    space: Arc<JetSpace>,
    order: usize,
    coeffs: Vec<T>,
}

impl<T: Real> fmt::Debug for Jet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.nvars())
            .field("order", &self.order)
            .field("value", &self.value())
            .finish()
    }
}

/// Seeds one jet per coordinate of `(x0, y0)`: value equal to the coordinate,
/// unit first-order coefficient in its own slot. Variables `0..n` are the
/// `x` slots and `n..2n` the `y` slots.
pub fn seed_variables<T: Real>(x0: &[T], y0: &[T], cfg: JetConfig) -> Result<Vec<Jet<T>>, JetError> {
    if cfg.order < 1 {
        return Err(JetError::BadConfig("truncation order must be at least 1".into()));
    }
    if x0.len() != cfg.n || y0.len() != cfg.n {
        return Err(JetError::BadConfig(format!(
            "expected {} coordinates for x and y, got {} and {}",
            cfg.n,
            x0.len(),
            y0.len()
        )));
    }
    if y0.iter().all(|v| *v == T::zero()) {
        return Err(JetError::ZeroVector);
    }
    let space = JetSpace::shared(cfg.nvars(), cfg.order);
    Ok(x0
        .iter()
        .chain(y0.iter())
        .enumerate()
        .map(|(v, &val)| Jet::variable(&space, cfg.order, v, val))
        .collect())
}

/// Binary operation selector for [`jet_arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Checked arithmetic between two jets of identical configuration.
pub fn jet_arith<T: Real>(a: &Jet<T>, b: &Jet<T>, op: ArithOp) -> Result<Jet<T>, JetError> {
    if a.nvars() != b.nvars() || a.order != b.order {
        return Err(JetError::ShapeMismatch(format!(
            "({} vars, order {}) vs ({} vars, order {})",
            a.nvars(),
            a.order,
            b.nvars(),
            b.order
        )));
    }
    Ok(match op {
        ArithOp::Add => a + b,
        ArithOp::Sub => a - b,
        ArithOp::Mul => a * b,
        ArithOp::Div => a.div(b)?,
    })
}

/// Elementary functions available on jets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JetFunc {
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    PowConst(f64),
}

pub fn jet_func<T: Real>(a: &Jet<T>, f: JetFunc) -> Result<Jet<T>, JetError> {
    match f {
        JetFunc::Sqrt => a.sqrt(),
        JetFunc::Exp => Ok(a.exp()),
        JetFunc::Log => a.ln(),
        JetFunc::Sin => Ok(a.sin()),
        JetFunc::Cos => Ok(a.cos()),
        JetFunc::PowConst(p) => a.powf(lit(p)),
    }
}

/// Partial derivative `∂^α a` at the expansion point.
pub fn extract_partial<T: Real>(a: &Jet<T>, idx: &MultiIndex) -> Result<T, JetError> {
    a.partial(idx)
}

impl<T: Real> Jet<T> {
    pub fn constant(space: &Arc<JetSpace>, order: usize, value: T) -> Self {
        assert!(order <= space.max_order());
        let mut coeffs = vec![T::zero(); space.len(order)];
        coeffs[0] = value;
        Jet {
            space: space.clone(),
            order,
            coeffs,
        }
    }

    pub fn variable(space: &Arc<JetSpace>, order: usize, var: usize, value: T) -> Self {
        assert!(var < space.nvars());
        let mut j = Jet::constant(space, order, value);
        if order >= 1 {
            // degree-1 monomials follow the constant in graded order
            let idx = space
                .index_of(&MultiIndex::from_vars(space.nvars(), &[var]))
                .expect("unit monomial");
            j.coeffs[idx] = T::one();
        }
        j
    }

    /// Constant with the same space and order as `self`.
    pub fn constant_like(&self, value: T) -> Self {
        Jet::constant(&self.space, self.order, value)
    }

    pub fn zero_like(&self) -> Self {
        self.constant_like(T::zero())
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn nvars(&self) -> usize {
        self.space.nvars()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> T {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Taylor coefficient of a monomial (zero when above the jet's order).
    pub fn coeff(&self, idx: &MultiIndex) -> T {
        if idx.order() > self.order {
            return T::zero();
        }
        self.space
            .index_of(idx)
            .map(|i| self.coeffs[i])
            .unwrap_or_else(T::zero)
    }

    pub fn partial(&self, idx: &MultiIndex) -> Result<T, JetError> {
        if idx.nvars() != self.nvars() {
            return Err(JetError::ShapeMismatch(format!(
                "multi-index has {} slots, jet has {} variables",
                idx.nvars(),
                self.nvars()
            )));
        }
        if idx.order() > self.order {
            return Err(JetError::OrderExceeded {
                needed: idx.order(),
                available: self.order,
            });
        }
        let i = self.space.index_of(idx).expect("index within space");
        Ok(self.coeffs[i] * lit(self.space.factorial(i)))
    }

    /// Drops every coefficient above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        Jet {
            space: self.space.clone(),
            order,
            coeffs: self.coeffs[..self.space.len(order)].to_vec(),
        }
    }

    /// Exact partial derivative with respect to variable `var`, as a jet of
    /// one lower order.
    pub fn derivative(&self, var: usize) -> Result<Self, JetError> {
        if self.order == 0 {
            return Err(JetError::OrderExceeded {
                needed: 1,
                available: 0,
            });
        }
        let order = self.order - 1;
        let mut coeffs = vec![T::zero(); self.space.len(order)];
        for &(src, dst, factor) in self.space.derivative_table(var, order) {
            coeffs[dst as usize] = self.coeffs[src as usize] * lit(factor as f64);
        }
        Ok(Jet {
            space: self.space.clone(),
            order,
            coeffs,
        })
    }

    pub fn scale(&self, c: T) -> Self {
        Jet {
            space: self.space.clone(),
            order: self.order,
            coeffs: self.coeffs.iter().map(|&v| v * c).collect(),
        }
    }

    pub fn add_scalar(&self, c: T) -> Self {
        let mut out = self.clone();
        out.coeffs[0] = out.coeffs[0] + c;
        out
    }

    fn same_space(&self, other: &Self) {
        assert!(
            Arc::ptr_eq(&self.space, &other.space) || self.nvars() == other.nvars(),
            "jet operands from different variable spaces"
        );
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        self.same_space(other);
        let order = self.order.min(other.order);
        let len = self.space.len(order);
        Jet {
            space: self.space.clone(),
            order,
            coeffs: (0..len).map(|i| f(self.coeffs[i], other.coeffs[i])).collect(),
        }
    }

    fn product(&self, other: &Self) -> Self {
        self.same_space(other);
        let order = self.order.min(other.order);
        let mut coeffs = vec![T::zero(); self.space.len(order)];
        for &[i, j, k] in self.space.product_table(order) {
            coeffs[k as usize] = coeffs[k as usize] + self.coeffs[i as usize] * other.coeffs[j as usize];
        }
        Jet {
            space: self.space.clone(),
            order,
            coeffs,
        }
    }

    /// Composes a univariate function with Taylor coefficients `c[k] = f⁽ᵏ⁾(a₀)/k!`
    /// (with `c.len() == order + 1`) with this jet.
    fn compose(&self, c: &[T]) -> Self {
        debug_assert_eq!(c.len(), self.order + 1);
        let mut shifted = self.clone();
        shifted.coeffs[0] = T::zero();
        let mut acc = self.constant_like(c[self.order]);
        for k in (0..self.order).rev() {
            acc = acc.product(&shifted);
            acc.coeffs[0] = acc.coeffs[0] + c[k];
        }
        acc
    }

    pub fn recip(&self) -> Result<Self, JetError> {
        let a0 = self.value();
        if a0 == T::zero() {
            return Err(JetError::DivisionByZero);
        }
        let inv = a0.recip();
        let mut c = Vec::with_capacity(self.order + 1);
        let mut term = inv;
        for _ in 0..=self.order {
            c.push(term);
            term = -term * inv;
        }
        Ok(self.compose(&c))
    }

    pub fn div(&self, other: &Self) -> Result<Self, JetError> {
        Ok(self * &other.recip()?)
    }

    pub fn powf(&self, p: T) -> Result<Self, JetError> {
        if p.fract() == T::zero() && p >= T::zero() && p <= lit(64.0) {
            return Ok(self.powi(p.to_u32().unwrap_or(0)));
        }
        let a0 = self.value();
        let integral = p.fract() == T::zero();
        if a0 == T::zero() || (!integral && a0 < T::zero()) {
            return Err(JetError::Domain {
                func: "pow",
                value: a0.to_f64().unwrap_or(f64::NAN),
            });
        }
        let mut c = Vec::with_capacity(self.order + 1);
        // binom(p, k) a0^(p-k)
        let mut binom = T::one();
        for k in 0..=self.order {
            let kk: T = lit(k as f64);
            let pow = if integral {
                a0.powi((p - kk).to_i32().unwrap_or(0))
            } else {
                a0.powf(p - kk)
            };
            c.push(binom * pow);
            binom = binom * (p - kk) / (kk + T::one());
        }
        Ok(self.compose(&c))
    }

    pub fn powi(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = self.constant_like(T::one());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.product(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.product(&base);
            }
        }
        acc
    }

    pub fn sqrt(&self) -> Result<Self, JetError> {
        let a0 = self.value();
        if a0 <= T::zero() {
            return Err(JetError::Domain {
                func: "sqrt",
                value: a0.to_f64().unwrap_or(f64::NAN),
            });
        }
        self.powf(lit(0.5))
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        let mut c = Vec::with_capacity(self.order + 1);
        let mut fact = T::one();
        for k in 0..=self.order {
            if k > 0 {
                fact = fact * lit(k as f64);
            }
            c.push(e / fact);
        }
        self.compose(&c)
    }

    pub fn ln(&self) -> Result<Self, JetError> {
        let a0 = self.value();
        if a0 <= T::zero() {
            return Err(JetError::Domain {
                func: "log",
                value: a0.to_f64().unwrap_or(f64::NAN),
            });
        }
        let mut c = Vec::with_capacity(self.order + 1);
        c.push(a0.ln());
        let inv = a0.recip();
        let mut p = inv;
        for k in 1..=self.order {
            let sign = if k % 2 == 1 { T::one() } else { -T::one() };
            c.push(sign * p / lit(k as f64));
            p = p * inv;
        }
        Ok(self.compose(&c))
    }

    fn trig(&self, phase: usize) -> Self {
        let a0 = self.value();
        let (s, co) = a0.sin_cos();
        let cycle = [s, co, -s, -co];
        let mut c = Vec::with_capacity(self.order + 1);
        let mut fact = T::one();
        for k in 0..=self.order {
            if k > 0 {
                fact = fact * lit(k as f64);
            }
            c.push(cycle[(k + phase) % 4] / fact);
        }
        self.compose(&c)
    }

    pub fn sin(&self) -> Self {
        self.trig(0)
    }

    pub fn cos(&self) -> Self {
        self.trig(1)
    }

    /// Largest absolute coefficient; used by tests comparing jets.
    pub fn max_abs_coeff(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

impl<T: Real> Add for &Jet<T> {
    type Output = Jet<T>;
    fn add(self, rhs: Self) -> Jet<T> {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl<T: Real> Sub for &Jet<T> {
    type Output = Jet<T>;
    fn sub(self, rhs: Self) -> Jet<T> {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl<T: Real> Mul for &Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: Self) -> Jet<T> {
        self.product(rhs)
    }
}

impl<T: Real> Neg for &Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.scale(-T::one())
    }
}
