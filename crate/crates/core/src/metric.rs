//! Metric catalog: declarative specs, compiled evaluators and axiom checks.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{self, Env, Expr, ExprError};
use crate::jet::JetError;
use crate::scalar::{lit, to_f64, Real, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("invalid metric spec: {0}")]
    Spec(String),
    #[error("expression error in {field}: {source}")]
    Expr { field: String, source: ExprError },
    #[error("point x = {x:?} lies outside the chart {chart}")]
    OutOfChart { x: Vec<f64>, chart: String },
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// A metric coefficient: a literal number or an expression in `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coef {
    Num(f64),
    Expr(String),
}

impl From<f64> for Coef {
    fn from(v: f64) -> Self {
        Coef::Num(v)
    }
}

impl From<&str> for Coef {
    fn from(s: &str) -> Self {
        Coef::Expr(s.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    /// `F = sqrt(a_ij(x) yⁱ yʲ)`.
    Riemannian { a: Vec<Vec<Coef>> },
    /// `F = sqrt(a_ij(x) yⁱ yʲ) + b_i(x) yⁱ`.
    Randers { a: Vec<Vec<Coef>>, b: Vec<Coef> },
    /// Funk-type metric on the unit ball with the constant vector `a`.
    Funk {
        #[serde(rename = "funk_a")]
        a: Vec<f64>,
    },
    /// Arbitrary expression in `x`, `y` and named parameters.
    Custom { expression: String },
}

/// Coordinate domain of the single chart a metric lives on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Chart {
    Unbounded,
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Chart {
    pub fn unit_ball(n: usize) -> Self {
        Chart::Ball {
            center: vec![0.0; n],
            radius: 1.0,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Chart::Unbounded => x.iter().all(|v| v.is_finite()),
            Chart::Ball { center, radius } => {
                let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                r2 < radius * radius
            }
            Chart::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| l < v && v < h),
        }
    }

    /// Draws a point well inside the chart: within half the radius of a
    /// ball, the middle half of a box, or `[-0.5, 0.5]ⁿ` when unbounded.
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Vec<f64> {
        match self {
            Chart::Unbounded => (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect(),
            Chart::Ball { center, radius } => {
                let dir = unit_vector(n, rng);
                let r = 0.5 * radius * rng.gen::<f64>().powf(1.0 / n as f64);
                dir.iter().zip(center).map(|(d, c)| c + r * d).collect()
            }
            Chart::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| {
                    let mid = 0.5 * (l + h);
                    let half = 0.25 * (h - l);
                    rng.gen_range(mid - half..mid + half)
                })
                .collect(),
        }
    }

    fn describe(&self) -> String {
        match self {
            Chart::Unbounded => "unbounded".into(),
            Chart::Ball { center, radius } => format!("ball(center={center:?}, radius={radius})"),
            Chart::Box { lo, hi } => format!("box(lo={lo:?}, hi={hi:?})"),
        }
    }
}

/// Uniform direction on the unit sphere of `Rⁿ`.
pub fn unit_vector(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r2: f64 = v.iter().map(|a| a * a).sum();
        if r2 > 1e-4 && r2 <= 1.0 {
            let r = r2.sqrt();
            return v.iter().map(|a| a / r).collect();
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricSpec {
    pub dimension: usize,
    #[serde(flatten)]
    pub family: Family,
    pub chart: Option<Chart>,
    /// Named constants available to expressions.
    pub params: BTreeMap<String, Vec<f64>>,
}

impl MetricSpec {
    pub fn new(dimension: usize, family: Family) -> Self {
        MetricSpec {
            dimension,
            family,
            chart: None,
            params: BTreeMap::new(),
        }
    }

    pub fn euclidean(n: usize) -> Self {
        MetricSpec::new(n, Family::Riemannian { a: identity(n) })
    }

    pub fn funk(a: &[f64]) -> Self {
        MetricSpec::new(a.len(), Family::Funk { a: a.to_vec() })
    }

    pub fn randers_flat(b: &[f64]) -> Self {
        let n = b.len();
        MetricSpec::new(
            n,
            Family::Randers {
                a: identity(n),
                b: b.iter().map(|&v| Coef::Num(v)).collect(),
            },
        )
    }

    /// Round sphere of curvature 1 in stereographic coordinates:
    /// `a_ij = 4 δ_ij / (1 + |x|²)²`.
    pub fn round_sphere(n: usize) -> Self {
        let a = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            Coef::Expr("4/(1 + abs2(x))^2".into())
                        } else {
                            Coef::Num(0.0)
                        }
                    })
                    .collect()
            })
            .collect();
        MetricSpec::new(n, Family::Riemannian { a })
    }

    pub fn custom(n: usize, expression: &str) -> Self {
        MetricSpec::new(
            n,
            Family::Custom {
                expression: expression.into(),
            },
        )
    }

    pub fn with_chart(mut self, chart: Chart) -> Self {
        self.chart = Some(chart);
        self
    }

    pub fn with_param(mut self, name: &str, value: Vec<f64>) -> Self {
        self.params.insert(name.into(), value);
        self
    }
}

fn identity(n: usize) -> Vec<Vec<Coef>> {
    (0..n)
        .map(|i| (0..n).map(|j| Coef::Num(if i == j { 1.0 } else { 0.0 })).collect())
        .collect()
}

#[derive(Clone, Debug)]
enum Compiled<T> {
    Quadratic {
        a: Vec<Vec<Expr>>,
        b: Option<Vec<Expr>>,
    },
    Funk {
        a: Vec<T>,
    },
    Custom {
        expr: Expr,
    },
}

/// A compiled metric ready for evaluation on reals or jets.
#[derive(Clone, Debug)]
pub struct MetricInstance<T: Real> {
    spec: MetricSpec,
    chart: Chart,
    params: BTreeMap<String, Vec<T>>,
    compiled: Compiled<T>,
}

fn compile_coef(c: &Coef, field: &str, n: usize, allow_y: bool) -> Result<Expr, MetricError> {
    let e = match c {
        Coef::Num(v) => {
            if !v.is_finite() {
                return Err(MetricError::Spec(format!("{field} is not finite")));
            }
            Expr::Num(*v)
        }
        Coef::Expr(src) => expr::parse_str(src).map_err(|source| MetricError::Expr {
            field: field.to_string(),
            source,
        })?,
    };
    if !allow_y && !e.is_y_free() {
        return Err(MetricError::Spec(format!("{field} may depend on x only")));
    }
    if e.max_index() > n {
        return Err(MetricError::Spec(format!(
            "{field} uses component index {} but the dimension is {n}",
            e.max_index()
        )));
    }
    Ok(e)
}

fn check_params(e: &Expr, field: &str, params: &BTreeMap<String, Vec<f64>>) -> Result<(), MetricError> {
    for (name, as_vector) in e.params() {
        match params.get(&name) {
            None => {
                return Err(MetricError::Expr {
                    field: field.into(),
                    source: ExprError::UnboundVariable(name),
                })
            }
            Some(v) if !as_vector && v.len() != 1 => {
                return Err(MetricError::Spec(format!(
                    "{field} uses vector parameter {name} as a scalar"
                )))
            }
            _ => {}
        }
    }
    Ok(())
}

/// Builds an evaluable metric, checking the structural invariants of `spec`.
pub fn build_metric<T: Real>(spec: &MetricSpec) -> Result<MetricInstance<T>, MetricError> {
    let n = spec.dimension;
    if n < 2 {
        return Err(MetricError::Spec(format!("dimension must be at least 2, got {n}")));
    }
    for (name, v) in &spec.params {
        if name == "x" || name == "y" || expr::Func::from_name(name).is_some() {
            return Err(MetricError::Spec(format!("parameter name {name:?} is reserved")));
        }
        if name.ends_with(|c: char| c.is_ascii_digit()) || !name.starts_with(|c: char| c.is_ascii_lowercase()) {
            return Err(MetricError::Spec(format!(
                "parameter name {name:?} must match [a-z][a-z0-9]* and not end in a digit"
            )));
        }
        if v.is_empty() || v.iter().any(|c| !c.is_finite()) {
            return Err(MetricError::Spec(format!("parameter {name} must be a non-empty finite vector")));
        }
    }
    let quadratic = |a: &Vec<Vec<Coef>>| -> Result<Vec<Vec<Expr>>, MetricError> {
        if a.len() != n || a.iter().any(|r| r.len() != n) {
            return Err(MetricError::Spec(format!("a must be a {n}x{n} matrix")));
        }
        for i in 0..n {
            for j in 0..i {
                if a[i][j] != a[j][i] {
                    return Err(MetricError::Spec(format!("a is not symmetric at ({}, {})", i + 1, j + 1)));
                }
            }
        }
        let mut out = Vec::with_capacity(n);
        for (i, row) in a.iter().enumerate() {
            let mut r = Vec::with_capacity(n);
            for (j, c) in row.iter().enumerate() {
                let field = format!("a[{}][{}]", i + 1, j + 1);
                let e = compile_coef(c, &field, n, false)?;
                check_params(&e, &field, &spec.params)?;
                r.push(e);
            }
            out.push(r);
        }
        Ok(out)
    };
    let (compiled, default_chart) = match &spec.family {
        Family::Riemannian { a } => (Compiled::Quadratic { a: quadratic(a)?, b: None }, Chart::Unbounded),
        Family::Randers { a, b } => {
            if b.len() != n {
                return Err(MetricError::Spec(format!("b must have {n} entries")));
            }
            let b = b
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let field = format!("b[{}]", i + 1);
                    let e = compile_coef(c, &field, n, false)?;
                    check_params(&e, &field, &spec.params)?;
                    Ok(e)
                })
                .collect::<Result<Vec<_>, MetricError>>()?;
            (
                Compiled::Quadratic {
                    a: quadratic(a)?,
                    b: Some(b),
                },
                Chart::Unbounded,
            )
        }
        Family::Funk { a } => {
            if a.len() != n {
                return Err(MetricError::Spec(format!("funk vector a must have {n} entries")));
            }
            let norm: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm < 1.0) {
                return Err(MetricError::Spec(format!("funk vector a must satisfy |a| < 1, got {norm}")));
            }
            (
                Compiled::Funk {
                    a: a.iter().map(|&v| lit(v)).collect(),
                },
                Chart::unit_ball(n),
            )
        }
        Family::Custom { expression } => {
            let e = compile_coef(&Coef::Expr(expression.clone()), "expression", n, true)?;
            check_params(&e, "expression", &spec.params)?;
            (Compiled::Custom { expr: e }, Chart::Unbounded)
        }
    };
    let chart = spec.chart.clone().unwrap_or(default_chart);
    match &chart {
        Chart::Ball { center, radius } if center.len() != n || !(*radius > 0.0) => {
            return Err(MetricError::Spec("chart ball needs an n-vector center and positive radius".into()))
        }
        Chart::Box { lo, hi } if lo.len() != n || hi.len() != n || lo.iter().zip(hi).any(|(l, h)| !(l < h)) => {
            return Err(MetricError::Spec("chart box needs n-vectors lo < hi".into()))
        }
        _ => {}
    }
    Ok(MetricInstance {
        spec: spec.clone(),
        chart,
        params: spec
            .params
            .iter()
            .map(|(k, v)| (k.clone(), v.iter().map(|&c| lit(c)).collect()))
            .collect(),
        compiled,
    })
}

fn dot<T: Real, S: Scalar<T>>(a: &[S], b: &[S]) -> S {
    let mut acc = a[0].mul(&b[0]);
    for (u, v) in a.iter().zip(b).skip(1) {
        acc = acc.add(&u.mul(v));
    }
    acc
}

impl<T: Real> MetricInstance<T> {
    pub fn spec(&self) -> &MetricSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dimension
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn is_riemannian_family(&self) -> bool {
        matches!(self.spec.family, Family::Riemannian { .. })
    }

    pub fn check_chart(&self, x: &[T]) -> Result<(), MetricError> {
        let xs: Vec<f64> = x.iter().map(|&v| to_f64(v)).collect();
        if self.chart.contains(&xs) {
            Ok(())
        } else {
            Err(MetricError::OutOfChart {
                x: xs,
                chart: self.chart.describe(),
            })
        }
    }

    fn expr_err(field: &str) -> impl Fn(ExprError) -> MetricError + '_ {
        move |source| match source {
            ExprError::Domain(j) => MetricError::Jet(j),
            source => MetricError::Expr {
                field: field.to_string(),
                source,
            },
        }
    }

    /// `F(x, y)` on reals or jets. The chart is checked on the values of `x`.
    pub fn eval<S: Scalar<T>>(&self, x: &[S], y: &[S]) -> Result<S, MetricError> {
        let n = self.dim();
        if x.len() != n || y.len() != n {
            return Err(MetricError::Spec(format!(
                "expected {n}-vectors, got x of length {} and y of length {}",
                x.len(),
                y.len()
            )));
        }
        let xv: Vec<T> = x.iter().map(|s| s.value()).collect();
        self.check_chart(&xv)?;
        if y.iter().all(|s| s.value() == T::zero()) {
            return Err(JetError::ZeroVector.into());
        }
        let env = Env {
            x,
            y,
            params: &self.params,
        };
        match &self.compiled {
            Compiled::Quadratic { a, b } => {
                let mut alpha2: Option<S> = None;
                for i in 0..n {
                    for j in i..n {
                        let coef = expr::eval(&a[i][j], &env).map_err(Self::expr_err("a"))?;
                        let mut term = coef.mul(&y[i]).mul(&y[j]);
                        if i != j {
                            term = term.scale(lit(2.0));
                        }
                        alpha2 = Some(match alpha2 {
                            None => term,
                            Some(acc) => acc.add(&term),
                        });
                    }
                }
                let mut f = alpha2.expect("n >= 2").sqrt()?;
                if let Some(b) = b {
                    for (bi, yi) in b.iter().zip(y) {
                        let coef = expr::eval(bi, &env).map_err(Self::expr_err("b"))?;
                        f = f.add(&coef.mul(yi));
                    }
                }
                Ok(f)
            }
            Compiled::Funk { a } => {
                let av: Vec<S> = a.iter().map(|&c| y[0].constant_like(c)).collect();
                let xy = dot(x, y);
                let xx = dot(x, x);
                let yy = dot(y, y);
                let disc = yy.sub(&xx.mul(&yy).sub(&xy.mul(&xy)));
                let num = disc.sqrt()?.add(&xy).add(&dot(&av, y));
                let den = xx.neg().add(&xx.constant_like(T::one()));
                Ok(num.div(&den)?)
            }
            Compiled::Custom { expr: e } => expr::eval(e, &env).map_err(Self::expr_err("expression")),
        }
    }

    /// `F(x, y)` on plain reals.
    pub fn value(&self, x: &[T], y: &[T]) -> Result<T, MetricError> {
        self.eval(x, y)
    }
}

/// The Funk-type closed form
/// `(sqrt(|y|² − (|x|²|y|² − ⟨x,y⟩²)) + ⟨x,y⟩ + ⟨a,y⟩) / (1 − |x|²)`.
pub fn funk_metric(a: &[f64], x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    let d = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p * q).sum::<f64>();
    let xx = d(x, x);
    if !(xx < 1.0) {
        return Err(MetricError::OutOfChart {
            x: x.to_vec(),
            chart: Chart::unit_ball(x.len()).describe(),
        });
    }
    if d(a, a) >= 1.0 {
        return Err(MetricError::Spec("funk vector a must satisfy |a| < 1".into()));
    }
    if y.iter().all(|&v| v == 0.0) {
        return Err(JetError::ZeroVector.into());
    }
    let (yy, xy) = (d(y, y), d(x, y));
    Ok(((yy - (xx * yy - xy * xy)).sqrt() + xy + d(a, y)) / (1.0 - xx))
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub homogeneity_residual: f64,
    pub min_eigenvalue: f64,
    pub euler_residual: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub samples: Vec<ValidationSample>,
    pub max_homogeneity_residual: f64,
    pub min_eigenvalue: f64,
    /// Index of the first failing sample, if any.
    pub first_failure: Option<usize>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks positive homogeneity and positive definiteness of `g` at seeded
/// sample points (`y` on the unit sphere, rescaled by 0.5, 1 and 2).
pub fn validate<T: Real>(m: &MetricInstance<T>, samples: usize, seed: u64) -> ValidationReport {
    let tol = 1e-10;
    let n = m.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<(Vec<f64>, Vec<f64>)> = (0..samples.max(1))
        .map(|k| {
            let x = m.chart.sample(n, &mut rng);
            let y: Vec<f64> = unit_vector(n, &mut rng)
                .iter()
                .map(|v| v * [0.5, 1.0, 2.0][k % 3])
                .collect();
            (x, y)
        })
        .collect();
    validate_points(m, &points, tol)
}

/// Validation at explicit points.
pub fn validate_points<T: Real>(m: &MetricInstance<T>, points: &[(Vec<f64>, Vec<f64>)], tol: f64) -> ValidationReport {
    let mut out = Vec::with_capacity(points.len());
    for (x, y) in points {
        out.push(validate_one(m, x, y, tol));
    }
    let first_failure = out.iter().position(|s| !s.passed);
    ValidationReport {
        max_homogeneity_residual: out.iter().map(|s| s.homogeneity_residual).fold(0.0, f64::max),
        min_eigenvalue: out.iter().map(|s| s.min_eigenvalue).fold(f64::INFINITY, f64::min),
        pass: first_failure.is_none(),
        first_failure,
        samples: out,
        tolerance: tol,
    }
}

fn validate_one<T: Real>(m: &MetricInstance<T>, x: &[f64], y: &[f64], tol: f64) -> ValidationSample {
    let xt: Vec<T> = x.iter().map(|&v| lit(v)).collect();
    let yt: Vec<T> = y.iter().map(|&v| lit(v)).collect();
    let failed = |h: f64| ValidationSample {
        x: x.to_vec(),
        y: y.to_vec(),
        homogeneity_residual: h,
        min_eigenvalue: f64::NAN,
        euler_residual: f64::NAN,
        passed: false,
    };
    let Ok(f) = m.value(&xt, &yt) else {
        return failed(f64::NAN);
    };
    let f = to_f64(f);
    let mut h = 0.0f64;
    for lam in [0.5, 2.0, 3.0] {
        let ys: Vec<T> = y.iter().map(|&v| lit(v * lam)).collect();
        match m.value(&xt, &ys) {
            Ok(v) => h = h.max((to_f64(v) - lam * f).abs() / (lam * f.abs()).max(1e-300)),
            Err(_) => return failed(f64::NAN),
        }
    }
    let p = crate::curvature::PointState::new(xt, yt);
    let (min_eig, euler) = match crate::curvature::metric_tensor(m, &p) {
        Ok(g) => {
            let g = g.to_f64();
            let eig = crate::linalg::symmetric_eigenvalues(&g);
            let gyy: f64 = crate::tensor::indices(m.dim(), 2)
                .map(|i| g.get(&i) * y[i[0]] * y[i[1]])
                .sum();
            (eig[0], (gyy - f * f).abs() / (f * f))
        }
        Err(_) => (f64::NAN, f64::NAN),
    };
    let passed = f > 0.0 && h <= tol && min_eig > 0.0 && euler <= 1e-8;
    ValidationSample {
        x: x.to_vec(),
        y: y.to_vec(),
        homogeneity_residual: h,
        min_eigenvalue: min_eig,
        euler_residual: euler,
        passed,
    }
}
