use rayon::prelude::*;
use serde::Serialize;

use super::fits::{relative_stretch_jet, semi_c_at};
use super::frame::{frame_jets, mu_jet};
use super::{h_dot, CheckPoint, TheoremCheckResult, Verdict, I_FLOOR};
use crate::curvature::{flag_from, JetGeometry, PointState, Tower};
use crate::error::{Error, Result};
use crate::metric::MetricInstance;
use crate::scalar::{lit, to_f64, Real};
use crate::tensor::{relative_residual, Slot, Tensor, TensorBlock, RESIDUAL_FLOOR};
use crate::transport::GeodesicSolution;

/// Spread of flag curvature allowed before a point counts as having
/// non-constant curvature.
pub const FLAG_SPREAD_TOL: f64 = 1e-4;

#[derive(Clone, Debug, Serialize)]
pub struct FlagConstancy {
    /// Mean flag curvature over the probed flags.
    pub lambda: f64,
    pub spread: f64,
    pub values: Vec<f64>,
}

fn flag_probe<T: Real>(g: &TensorBlock<T>, r1: &TensorBlock<T>, y: &[T]) -> Result<FlagConstancy> {
    let n = y.len();
    let mut probes: Vec<Vec<T>> = Vec::new();
    for k in 0..n {
        probes.push((0..n).map(|i| if i == k { T::one() } else { T::zero() }).collect());
        for j in k + 1..n {
            probes.push(
                (0..n)
                    .map(|i| match i {
                        _ if i == k => T::one(),
                        _ if i == j => lit(-2.0),
                        _ => lit(0.3),
                    })
                    .collect(),
            );
        }
    }
    let mut values = Vec::new();
    for u in &probes {
        match flag_from(g, r1, y, u) {
            Ok(k) => values.push(to_f64(k)),
            Err(Error::DegenerateFlag) => {}
            Err(e) => return Err(e),
        }
    }
    if values.is_empty() {
        return Err(Error::DegenerateFlag);
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(FlagConstancy {
        lambda: values.iter().sum::<f64>() / values.len() as f64,
        spread: hi - lo,
        values,
    })
}

/// Flag curvature at `p` over a fixed set of transverse directions.
pub fn measure_flag_constancy<T: Real>(m: &MetricInstance<T>, p: &PointState<T>) -> Result<FlagConstancy> {
    let geo = JetGeometry::new(m, p, 4)?;
    flag_probe(&geo.g.value(), &geo.riemann1()?.value(), &p.y)
}

fn f64s<T: Real>(v: &[T]) -> Vec<f64> {
    v.iter().map(|&a| to_f64(a)).collect()
}

fn single(id: &str, p: &PointState<impl Real>, values: Vec<(String, f64)>, residual: f64, verdict: Verdict, note: Option<String>, tol: f64) -> TheoremCheckResult {
    TheoremCheckResult::from_points(
        id,
        vec![CheckPoint {
            t: None,
            x: f64s(&p.x),
            y: f64s(&p.y),
            values,
            residual,
            verdict,
            note,
        }],
        tol,
    )
}

/// Checks, at a point of a metric with constant flag curvature `λ`:
/// (a) `R_jⁱ_kl = λ(g_jl δⁱ_k − g_jk δⁱ_l)`,
/// (b) `Σ_jmkl = 2λ(C_jlm y_k − C_jkm y_l)`,
/// (c) `L_jmk + 2(λ/c) F C_jmk = 0`,
/// (d) `J_k + 2(λ/c) F I_k = 0`.
///
/// Parts (b)–(d) are vacuous at Riemannian points; (c) and (d) are skipped
/// when the relative-stretch ratio is undefined.
pub fn check_constant_flag_chain<T: Real>(
    m: &MetricInstance<T>,
    p: &PointState<T>,
    tol: f64,
) -> Result<TheoremCheckResult> {
    let tower = Tower::build(m, p)?;
    let geo = &tower.geo;
    let n = geo.n;
    let g = geo.g.value();
    let fc = flag_probe(&g, &tower.r1.value(), &p.y)?;
    if fc.spread > FLAG_SPREAD_TOL {
        return Err(Error::NotConstantCurvature { spread: fc.spread });
    }
    let lambda = lit::<T>(fc.lambda);
    let c = match relative_stretch_jet(&tower) {
        Ok((c, _, _)) => Some(c.value()),
        Err(Error::UndefinedFit(_)) => None,
        Err(e) => return Err(e),
    };
    let f = geo.f.value();
    let cv = tower.c.value();
    let riemannian = to_f64(cv.max_abs() * f) <= I_FLOOR;
    let floor = lit::<T>(RESIDUAL_FLOOR);
    let mut base = vec![("lambda".to_string(), fc.lambda), ("lambda_spread".to_string(), fc.spread)];
    if let Some(c) = c {
        base.push(("c".to_string(), to_f64(c)));
    }
    let with = |lhs: &TensorBlock<T>, rhs: &TensorBlock<T>| {
        let mut v = base.clone();
        v.push(("lhs_norm".to_string(), to_f64(lhs.max_abs())));
        v.push(("rhs_norm".to_string(), to_f64(rhs.max_abs())));
        v
    };

    let delta = |a: usize, b: usize| if a == b { T::one() } else { T::zero() };
    let rv = tower.r.value();
    let ra = Tensor::from_fn(n, &[Slot::Lower, Slot::Upper, Slot::Lower, Slot::Lower], |x| {
        let (j, i, k, l) = (x[0], x[1], x[2], x[3]);
        lambda * (*g.get(&[j, l]) * delta(i, k) - *g.get(&[j, k]) * delta(i, l))
    });
    let res_a = to_f64(relative_residual(&rv, &ra, floor));
    let part_a = single("a", p, with(&rv, &ra), res_a, Verdict::from_residual(res_a, tol), None, tol);

    let yl = geo.y_low.value();
    let sv = tower.sigma.value();
    let sb = Tensor::from_fn(n, &[Slot::Lower; 4], |x| {
        let (j, mm, k, l) = (x[0], x[1], x[2], x[3]);
        lit::<T>(2.0) * lambda * (*cv.get(&[j, l, mm]) * *yl.get(&[k]) - *cv.get(&[j, k, mm]) * *yl.get(&[l]))
    });
    let res_b = to_f64(relative_residual(&sv, &sb, floor));
    let vacuous = |id: &str, lhs: &TensorBlock<T>, rhs: &TensorBlock<T>, res: f64| {
        single(id, p, with(lhs, rhs), res, Verdict::Vacuous, Some("Cartan tensor vanishes".into()), tol)
    };
    let part_b = if riemannian {
        vacuous("b", &sv, &sb, res_b)
    } else {
        single("b", p, with(&sv, &sb), res_b, Verdict::from_residual(res_b, tol), None, tol)
    };

    let lv = tower.l.value();
    let jv = tower.j.value();
    let iv = tower.i.value();
    let ratio_part = |id: &str, lhs: &TensorBlock<T>, model: &TensorBlock<T>| match c {
        _ if riemannian => vacuous(id, lhs, model, 0.0),
        None => single(id, p, base.clone(), 0.0, Verdict::Skipped, Some("relative stretch ratio undefined".into()), tol),
        Some(c) => {
            let k = -lit::<T>(2.0) * lambda / c * f;
            let rhs = model.scale(k);
            let res = to_f64(relative_residual(lhs, &rhs, floor));
            single(id, p, with(lhs, &rhs), res, Verdict::from_residual(res, tol), None, tol)
        }
    };
    let part_c = ratio_part("c", &lv, &cv);
    let part_d = ratio_part("d", &jv, &iv);
    Ok(TheoremCheckResult::from_parts(
        "constant_flag_chain",
        vec![part_a, part_b, part_c, part_d],
        tol,
    ))
}

fn per_sample<T: Real, F>(geod: &GeodesicSolution, f: F) -> Result<Vec<CheckPoint>>
where
    F: Fn(&PointState<T>) -> Result<(Vec<(String, f64)>, f64, Verdict, Option<String>)> + Sync,
{
    let rows: Vec<Result<CheckPoint>> = (0..geod.len())
        .into_par_iter()
        .map(|k| {
            let p = geod.point::<T>(k);
            let (values, residual, verdict, note) = f(&p)?;
            Ok(CheckPoint {
                t: Some(geod.times[k]),
                x: geod.states[k].x.clone(),
                y: geod.states[k].y.clone(),
                values,
                residual,
                verdict,
                note,
            })
        })
        .collect();
    rows.into_iter().collect()
}

fn kv(pairs: &[(&str, f64)]) -> Vec<(String, f64)> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Along a geodesic of a two-dimensional metric, evaluates
/// `Q = 2μ′ + 2μ²F − cμF` with `μ′` from the horizontal derivative and
/// checks `Q·C = 0`.
pub fn check_theorem3_condition<T: Real>(
    m: &MetricInstance<T>,
    geod: &GeodesicSolution,
    c: f64,
    tol: f64,
) -> Result<TheoremCheckResult> {
    let n = m.dim();
    if n != 2 {
        return Err(Error::DimensionError {
            required: "n = 2",
            found: n,
        });
    }
    let points = per_sample::<T, _>(geod, |p| {
        let geo = JetGeometry::new(m, p, 5)?;
        let cart = geo.cartan()?;
        let f = to_f64(geo.f.value());
        let c_norm = to_f64(cart.value().max_abs());
        if c_norm * f <= I_FLOOR {
            return Ok((kv(&[("C_norm", c_norm)]), 0.0, Verdict::Vacuous, Some("Cartan tensor vanishes".into())));
        }
        let fr = frame_jets(&geo, &cart)?;
        let mu = mu_jet(&geo, &fr)?;
        let mu_prime = to_f64(h_dot(&geo, &mu)?.value());
        let mu = to_f64(mu.value());
        let terms = [2.0 * mu_prime, 2.0 * mu * mu * f, -c * mu * f];
        let q: f64 = terms.iter().sum();
        let scale = terms.iter().fold(0.0f64, |a, t| a.max(t.abs()));
        let values = kv(&[
            ("mu", mu),
            ("mu_prime", mu_prime),
            ("F", f),
            ("Q", q),
            ("C_norm", c_norm),
            ("Q_times_C", q.abs() * c_norm),
        ]);
        if scale <= 1e-10 {
            return Ok((values, q.abs(), Verdict::Degenerate, Some("mu vanishes".into())));
        }
        let res = q.abs() / scale;
        Ok((values, res, Verdict::from_residual(res, tol), None))
    })?;
    Ok(TheoremCheckResult::from_points("theorem3", points, tol))
}

/// Along a geodesic, reports `W = 2cc′ + c²F + 4λF` and checks
/// `[−λF² − (2λF/c)(c′ + 2λF/c)] C = 0`. The ratio `c` is `c_fixed` when
/// given, otherwise fitted at each sample; `c′` always comes from the
/// horizontal derivative of the fitted ratio.
pub fn check_corollary_condition<T: Real>(
    m: &MetricInstance<T>,
    geod: &GeodesicSolution,
    lambda: f64,
    c_fixed: Option<f64>,
    tol: f64,
) -> Result<TheoremCheckResult> {
    let points = per_sample::<T, _>(geod, |p| {
        let tower = Tower::build(m, p)?;
        let f = to_f64(tower.geo.f.value());
        let c_norm = to_f64(tower.c.value().max_abs());
        if c_norm * f <= I_FLOOR {
            return Ok((kv(&[("C_norm", c_norm)]), 0.0, Verdict::Degenerate, Some("Cartan tensor vanishes".into())));
        }
        let (cj, _, _) = match relative_stretch_jet(&tower) {
            Ok(v) => v,
            Err(Error::UndefinedFit(msg)) => {
                return Ok((kv(&[("C_norm", c_norm)]), 0.0, Verdict::Skipped, Some(msg)));
            }
            Err(e) => return Err(e),
        };
        let c_prime = to_f64(h_dot(&tower.geo, &cj)?.value());
        let c = c_fixed.unwrap_or_else(|| to_f64(cj.value()));
        let w = 2.0 * c * c_prime + c * c * f + 4.0 * lambda * f;
        let k = 2.0 * lambda * f / c;
        let e = -lambda * f * f - k * (c_prime + k);
        let scale = (lambda * f * f).abs() + k.abs() * (c_prime.abs() + k.abs());
        let values = kv(&[
            ("c", c),
            ("c_prime", c_prime),
            ("F", f),
            ("W", w),
            ("consistency", e),
            ("C_norm", c_norm),
        ]);
        if scale <= 1e-12 {
            return Ok((values, e.abs(), Verdict::Degenerate, Some("lambda vanishes".into())));
        }
        let res = e.abs() / scale;
        Ok((values, res, Verdict::from_residual(res, tol), None))
    })?;
    Ok(TheoremCheckResult::from_points("corollary", points, tol))
}

/// Samples the characteristic scalar `p` along a geodesic and reports its
/// variation `|p(t) − p(0)|` and `p′ = p_{|m} yᵐ`.
pub fn check_characteristic_constancy<T: Real>(
    m: &MetricInstance<T>,
    geod: &GeodesicSolution,
    tol: f64,
) -> Result<TheoremCheckResult> {
    let n = m.dim();
    if n < 3 {
        return Err(Error::DimensionError {
            required: "n >= 3",
            found: n,
        });
    }
    let mut points = per_sample::<T, _>(geod, |p| {
        let geo = JetGeometry::new(m, p, 5)?;
        match semi_c_at(&geo) {
            Ok(fit) => Ok((
                kv(&[
                    ("p", fit.p),
                    ("q", fit.q),
                    ("p_prime", fit.p_prime),
                    ("fit_residual", fit.residual),
                    ("I_norm2", fit.i_norm2),
                ]),
                0.0,
                Verdict::Pass,
                None,
            )),
            Err(Error::RiemannianPoint { norm }) => Ok((
                kv(&[("I_norm", norm)]),
                0.0,
                Verdict::Vacuous,
                Some(Error::RiemannianPoint { norm }.to_string()),
            )),
            Err(e) => Err(e),
        }
    })?;
    let p0 = points.iter().find_map(|pt| pt.value("p"));
    if let Some(p0) = p0 {
        for pt in points.iter_mut() {
            if let Some(p) = pt.value("p") {
                pt.residual = (p - p0).abs();
                pt.verdict = Verdict::from_residual(pt.residual, tol);
            }
        }
    }
    Ok(TheoremCheckResult::from_points("characteristic_constancy", points, tol))
}
