//! Acceptance criteria, one line each. Runs as a plain binary so the lines
//! always reach the test log.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use finsler::analysis::{
    berwald_frame, check_constant_flag_chain, check_theorem3_condition, fit_relative_stretch_points,
    fit_semi_c_reducible, Verdict,
};
use finsler::curvature::{flag_curvature, CurvatureBundle, PointState, Tower};
use finsler::metric::{build_metric, unit_vector, Coef, Family, MetricSpec};
use finsler::tensor::{indices, relative_residual, TensorBlock};
use finsler::transport::{
    integrate_geodesic, parallelogram_holonomy, scalar_flows, FlowQuantity, GeodesicOptions, HolonomyMode,
    OdeOptions,
};
use finsler::{Error, MetricInstance64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Criteria that cannot hold as stated. The suite reports them as FAIL and
/// treats any other outcome for them as a regression.
const KNOWN_UNATTAINABLE: &[u32] = &[9];

struct Named {
    name: &'static str,
    m: MetricInstance64,
}

fn named(name: &'static str, spec: MetricSpec) -> Named {
    Named {
        name,
        m: build_metric(&spec).unwrap_or_else(|e| panic!("{name}: {e}")),
    }
}

fn coef(s: &str) -> Coef {
    Coef::from(s)
}

fn randers_2d() -> MetricSpec {
    MetricSpec::new(
        2,
        Family::Randers {
            a: vec![vec![coef("1 + 0.2*x1^2"), coef("0.1*x2")], vec![coef("0.1*x2"), coef("exp(0.3*x1)")]],
            b: vec![coef("0.2*x2"), coef("0.1 + 0.1*x1")],
        },
    )
}

fn randers_3d() -> MetricSpec {
    MetricSpec::new(
        3,
        Family::Randers {
            a: vec![
                vec![coef("1 + 0.1*x2^2"), Coef::Num(0.0), coef("0.05*x1")],
                vec![Coef::Num(0.0), coef("exp(0.2*x3)"), Coef::Num(0.0)],
                vec![coef("0.05*x1"), Coef::Num(0.0), coef("1 + 0.1*x1^2")],
            ],
            b: vec![coef("0.1*x2"), coef("0.15 - 0.1*x3"), coef("0.1*x1*x2")],
        },
    )
}

fn riemannian_2d() -> MetricSpec {
    MetricSpec::new(
        2,
        Family::Riemannian {
            a: vec![vec![coef("1 + x1^2"), coef("0.2*x1*x2")], vec![coef("0.2*x1*x2"), coef("exp(0.5*x2)")]],
        },
    )
}

/// Flat `α` with a closed `β`: projectively flat with vanishing stretch.
fn randers_closed() -> MetricSpec {
    MetricSpec::new(
        2,
        Family::Randers {
            a: vec![vec![Coef::Num(1.0), Coef::Num(0.0)], vec![Coef::Num(0.0), Coef::Num(1.0)]],
            b: vec![coef("0.3*x2"), coef("0.3*x1")],
        },
    )
}

fn minkowski() -> MetricSpec {
    MetricSpec::custom(2, "(y1^4 + y2^4 + 0.5*y1^2*y2^2)^(1/4) + 0.2*y1")
}

fn riemannian_corpus() -> Vec<Named> {
    vec![
        named("euclidean-2", MetricSpec::euclidean(2)),
        named("euclidean-3", MetricSpec::euclidean(3)),
        named("sphere-2", MetricSpec::round_sphere(2)),
        named("sphere-3", MetricSpec::round_sphere(3)),
        named("riemannian-2", riemannian_2d()),
    ]
}

fn finsler_corpus() -> Vec<Named> {
    vec![
        named("funk-2", MetricSpec::funk(&[0.0, 0.0])),
        named("funk-3", MetricSpec::funk(&[0.0, 0.0, 0.0])),
        named("funk-shifted-2", MetricSpec::funk(&[0.2, 0.0])),
        named("randers-flat-3", MetricSpec::randers_flat(&[0.2, 0.0, 0.0])),
        named("randers-2", randers_2d()),
        named("randers-3", randers_3d()),
        named("minkowski-2", minkowski()),
    ]
}

fn points(m: &MetricInstance64, count: usize, seed: u64) -> Vec<PointState<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x = m.chart().sample(m.dim(), &mut rng);
            PointState::from_f64(&x, &unit_vector(m.dim(), &mut rng))
        })
        .collect()
}

/// Running maximum with the place it was attained.
#[derive(Default)]
struct Worst {
    value: f64,
    at: String,
}

impl Worst {
    fn see(&mut self, v: f64, at: impl FnOnce() -> String) {
        if v.is_nan() || v > self.value {
            self.value = if v.is_nan() { f64::INFINITY } else { v };
            self.at = at();
        }
    }

    fn show(&self) -> String {
        if self.at.is_empty() {
            format!("{:.1e}", self.value)
        } else {
            format!("{:.1e} ({})", self.value, self.at)
        }
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = fn() -> finsler::Result<Outcome>;

fn c1_funk_relative_stretch() -> finsler::Result<Outcome> {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for a in [vec![0.0; 2], vec![0.0; 3]] {
        let m = build_metric::<f64>(&MetricSpec::funk(&a))?;
        let fit = fit_relative_stretch_points(&m, &points(&m, 20, 1), 1e-3)?;
        let ok = (fit.c + 1.0).abs() <= 1e-3 && fit.spread <= 1e-3 && fit.residual <= 1e-5;
        pass &= ok;
        parts.push(format!(
            "n={} c={:.10} spread={:.1e} residual={:.1e}",
            a.len(),
            fit.c,
            fit.spread,
            fit.residual
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed <= Duration::from_secs(60);
    Ok(Outcome {
        pass,
        detail: format!("{}; {:.1}s", parts.join("; "), elapsed.as_secs_f64()),
    })
}

fn c2_funk_flag_curvature() -> finsler::Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [2, 3] {
        let m = build_metric::<f64>(&MetricSpec::funk(&vec![0.0; n]))?;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut ks = Vec::new();
        for p in points(&m, 50, 2) {
            loop {
                match flag_curvature(&m, &p, &unit_vector(n, &mut rng)) {
                    Ok(k) => {
                        ks.push(k);
                        break;
                    }
                    Err(Error::DegenerateFlag) => continue,
                    Err(e) => return Err(e),
                }
            }
        }
        let lo = ks.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = ks.iter().sum::<f64>() / ks.len() as f64;
        pass &= hi - lo <= 1e-4 && hi < 0.0;
        parts.push(format!("n={n} K={mean:.10} spread={:.1e}", hi - lo));
    }
    Ok(Outcome {
        pass,
        detail: parts.join("; "),
    })
}

fn c3_constant_flag_chain() -> finsler::Result<Outcome> {
    let m = build_metric::<f64>(&MetricSpec::funk(&[0.0; 3]))?;
    let mut pass = true;
    let mut worst = Worst::default();
    let mut lambda = Vec::new();
    let mut c_dev: f64 = 0.0;
    for (k, p) in points(&m, 10, 3).iter().enumerate() {
        let r = check_constant_flag_chain(&m, p, 1e-5)?;
        for id in ["a", "b", "c", "d"] {
            let part = r.part(id).expect("chain part");
            pass &= part.verdict == Verdict::Pass;
            worst.see(part.residual, || format!("part {id} at point {k}"));
        }
        let pt = &r.part("c").expect("chain part").points[0];
        lambda.push(pt.value("lambda").unwrap_or(f64::NAN));
        let c = pt.value("c").unwrap_or(f64::NAN);
        c_dev = c_dev.max((c + 1.0).abs());
    }
    pass &= c_dev <= 1e-3 && worst.value <= 1e-5;
    Ok(Outcome {
        pass,
        detail: format!(
            "lambda={:.10} max|c+1|={c_dev:.1e} max residual={}",
            lambda.iter().sum::<f64>() / lambda.len() as f64,
            worst.show()
        ),
    })
}

fn c4_bianchi() -> finsler::Result<Outcome> {
    let corpus = [
        named("euclidean-2", MetricSpec::euclidean(2)),
        named("sphere-2", MetricSpec::round_sphere(2)),
        named("randers-flat-3", MetricSpec::randers_flat(&[0.2, 0.0, 0.0])),
        named("funk-2", MetricSpec::funk(&[0.0, 0.0])),
        named("funk-shifted-2", MetricSpec::funk(&[0.2, 0.0])),
    ];
    let (mut first, mut second) = (Worst::default(), Worst::default());
    for c in &corpus {
        for (k, p) in points(&c.m, 10, 4).iter().enumerate() {
            let r = Tower::build(&c.m, p)?.identities()?;
            first.see(r.bianchi_first, || format!("{} #{k}", c.name));
            second.see(r.bianchi_second, || format!("{} #{k}", c.name));
        }
    }
    Ok(Outcome {
        pass: first.value <= 1e-5 && second.value <= 1e-5,
        detail: format!("first {} second {}", first.show(), second.show()),
    })
}

fn c5_stretch_routes() -> finsler::Result<Outcome> {
    let mut routes = Worst::default();
    for c in finsler_corpus() {
        for (k, p) in points(&c.m, 10, 5).iter().enumerate() {
            let r = Tower::build(&c.m, p)?.identities()?;
            routes.see(r.stretch_routes, || format!("{} #{k}", c.name));
        }
    }
    let mut sigma = Worst::default();
    let mut r_dot = Worst::default();
    for c in [named("minkowski-2", minkowski()), named("randers-flat-3", MetricSpec::randers_flat(&[0.2, 0.0, 0.0]))] {
        for (k, p) in points(&c.m, 10, 5).iter().enumerate() {
            let t = Tower::build(&c.m, p)?;
            sigma.see(t.sigma.value().max_abs(), || format!("{} #{k}", c.name));
            r_dot.see(t.geo.vertical(&t.r)?.value().max_abs(), || format!("{} #{k}", c.name));
        }
    }
    Ok(Outcome {
        pass: routes.value <= 1e-5 && sigma.value <= 1e-9 && r_dot.value <= 1e-9,
        detail: format!(
            "routes {}; R-quadratic |Sigma| {} |R.m| {}",
            routes.show(),
            sigma.show(),
            r_dot.show()
        ),
    })
}

fn c6_landsberg_routes() -> finsler::Result<Outcome> {
    let (mut l, mut j, mut gh, mut gv) = (Worst::default(), Worst::default(), Worst::default(), Worst::default());
    for c in finsler_corpus().into_iter().chain(riemannian_corpus()) {
        for (k, p) in points(&c.m, 10, 6).iter().enumerate() {
            let r = Tower::build(&c.m, p)?.identities()?;
            let at = || format!("{} #{k}", c.name);
            l.see(r.landsberg_routes, at);
            j.see(r.mean_landsberg_routes, at);
            gh.see(r.metric_horizontal, at);
            gv.see(r.metric_vertical, at);
        }
    }
    Ok(Outcome {
        pass: l.value <= 1e-6 && j.value <= 1e-6 && gh.value <= 1e-8 && gv.value <= 1e-8,
        detail: format!("L {} J {} g|k {} g.k {}", l.show(), j.show(), gh.show(), gv.show()),
    })
}

fn c7_semi_c() -> finsler::Result<Outcome> {
    let corpus = [
        named("randers-flat-3", MetricSpec::randers_flat(&[0.2, 0.0, 0.0])),
        named("randers-3", randers_3d()),
        named("funk-3", MetricSpec::funk(&[0.0, 0.0, 0.0])),
        named("funk-shifted-3", MetricSpec::funk(&[0.1, -0.2, 0.1])),
    ];
    let mut worst = Worst::default();
    let mut p_dev: f64 = 0.0;
    let (mut fitted, mut riemannian) = (0, 0);
    for c in &corpus {
        for (k, p) in points(&c.m, 10, 7).iter().enumerate() {
            match fit_semi_c_reducible(&c.m, p) {
                Ok(fit) => {
                    fitted += 1;
                    worst.see(fit.residual, || format!("{} #{k}", c.name));
                    p_dev = p_dev.max((fit.p - 1.0).abs());
                }
                Err(Error::RiemannianPoint { .. }) => riemannian += 1,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(Outcome {
        pass: fitted > 0 && worst.value <= 1e-6,
        detail: format!(
            "{fitted} points, {riemannian} Riemannian; residual {}; max|p-1|={p_dev:.1e}",
            worst.show()
        ),
    })
}

fn c8_berwald_frame() -> finsler::Result<Outcome> {
    let corpus = [
        named("funk-2", MetricSpec::funk(&[0.0, 0.0])),
        named("funk-shifted-2", MetricSpec::funk(&[0.2, 0.0])),
        named("randers-2", randers_2d()),
        named("minkowski-2", minkowski()),
    ];
    let (mut rec, mut lan) = (Worst::default(), Worst::default());
    let mut frames = 0;
    for c in &corpus {
        for (k, p) in points(&c.m, 10, 8).iter().enumerate() {
            let fr = berwald_frame(&c.m, p)?;
            frames += 1;
            rec.see(fr.reconstruction, || format!("{} #{k}", c.name));
            if let Some(r) = fr.landsberg_residual {
                lan.see(r, || format!("{} #{k}", c.name));
            }
        }
    }
    let mut q = Worst::default();
    let mut t3_pass = true;
    for (name, spec, x0, y0, c) in [
        ("funk-2", MetricSpec::funk(&[0.0, 0.0]), [0.1, -0.2], [0.6, 0.8], -1.0),
        ("funk-2", MetricSpec::funk(&[0.0, 0.0]), [-0.3, 0.4], [-1.0, 0.2], -1.0),
        ("randers-closed-2", randers_closed(), [1.0, 0.0], [1.0, 0.0], 0.0),
    ] {
        let m = build_metric::<f64>(&spec)?;
        let g = integrate_geodesic(&m, &x0, &y0, &GeodesicOptions::new(1.0, 20))?;
        let r = check_theorem3_condition(&m, &g, c, 1e-5)?;
        t3_pass &= r.verdict == Verdict::Pass;
        q.see(r.residual, || name.to_string());
    }
    Ok(Outcome {
        pass: frames > 0 && rec.value <= 1e-8 && lan.value <= 1e-7 && t3_pass && q.value <= 1e-5,
        detail: format!(
            "{frames} frames; C reconstruction {} L=muFC {}; product identity {}",
            rec.show(),
            lan.show(),
            q.show()
        ),
    })
}

/// RK4 for `mu' = mu F (c/2 - mu)` with `F` constant along a unit-speed
/// geodesic.
fn mu_rk4(mu0: f64, c: f64, f: f64, t: f64) -> f64 {
    let steps = 4000;
    let h = t / steps as f64;
    let rhs = |mu: f64| mu * f * (0.5 * c - mu);
    let mut mu = mu0;
    for _ in 0..steps {
        let k1 = rhs(mu);
        let k2 = rhs(mu + 0.5 * h * k1);
        let k3 = rhs(mu + 0.5 * h * k2);
        let k4 = rhs(mu + h * k3);
        mu += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    mu
}

fn c9_scalar_flows() -> finsler::Result<Outcome> {
    let (mut literal, mut half) = (Worst::default(), Worst::default());
    for (a, x0, y0) in [
        (vec![0.0, 0.0], vec![0.1, -0.2], vec![0.6, 0.8]),
        (vec![0.0, 0.0], vec![-0.4, 0.3], vec![1.0, 0.1]),
        (vec![0.0; 3], vec![0.1, 0.2, -0.3], vec![0.3, -0.5, 0.8]),
    ] {
        let m = build_metric::<f64>(&MetricSpec::funk(&a))?;
        let g = integrate_geodesic(&m, &x0, &y0, &GeodesicOptions::new(1.0, 20))?;
        let fl = scalar_flows(&m, &g, &[FlowQuantity::Phi], Some(-1.0))?;
        let at = || format!("funk-{} from {x0:?}", a.len());
        literal.see(fl.max_phi_law_residual.unwrap_or(f64::NAN), at);
        half.see(fl.max_phi_law_half_residual.unwrap_or(f64::NAN), at);
    }

    let mut mu_err = Worst::default();
    let cases = [
        ("randers-closed-2", randers_closed(), [1.0, 0.0], [1.0, 0.0], 0.0),
        ("funk-2", MetricSpec::funk(&[0.0, 0.0]), [0.1, -0.2], [0.6, 0.8], -1.0),
    ];
    for (name, spec, x0, y0, c) in cases {
        let m = build_metric::<f64>(&spec)?;
        let g = integrate_geodesic(&m, &x0, &y0, &GeodesicOptions::new(1.0, 10))?;
        let fl = scalar_flows(&m, &g, &[FlowQuantity::Mu], None)?;
        let mu0 = fl.samples[0].mu.unwrap_or(f64::NAN);
        for s in &fl.samples {
            let want = mu_rk4(mu0, c, s.f, s.t);
            let got = s.mu.unwrap_or(f64::NAN);
            mu_err.see((got - want).abs(), || format!("{name} t={}", s.t));
        }
    }

    let phi_ok = literal.value <= 1e-5;
    let mu_ok = mu_err.value <= 1e-4;
    Ok(Outcome {
        pass: phi_ok && mu_ok,
        detail: format!(
            "phi law (2cF) {} [{}]; phi law (cF) {}; mu flow vs oracle {} [{}]",
            literal.show(),
            if phi_ok { "ok" } else { "exceeds 1e-5" },
            half.show(),
            mu_err.show(),
            if mu_ok { "ok" } else { "exceeds 1e-4" }
        ),
    })
}

fn homogeneity(m: &MetricInstance64, p: &PointState<f64>, worst: &mut Worst, name: &str) -> finsler::Result<()> {
    let base = CurvatureBundle::compute(m, p)?;
    for lam in [0.5f64, 3.0] {
        let y: Vec<f64> = p.y.iter().map(|v| v * lam).collect();
        let b = CurvatureBundle::compute(m, &PointState::from_f64(&p.x, &y))?;
        let pairs: [(&str, &TensorBlock<f64>, &TensorBlock<f64>, i32); 15] = [
            ("g", &base.g, &b.g, 0),
            ("h", &base.h, &b.h, 0),
            ("C", &base.c, &b.c, -1),
            ("I", &base.i, &b.i, -1),
            ("G", &base.spray, &b.spray, 2),
            ("N", &base.n, &b.n, 1),
            ("Gamma", &base.gamma, &b.gamma, 0),
            ("B", &base.b, &b.b, -1),
            ("E", &base.e, &b.e, -1),
            ("R1", &base.r1, &b.r1, 2),
            ("R", &base.r, &b.r, 0),
            ("L", &base.l, &b.l, 0),
            ("J", &base.j, &b.j, 0),
            ("Sigma", &base.sigma, &b.sigma, 0),
            ("g_inv", &base.g_inv, &b.g_inv, 0),
        ];
        for (t, a, s, deg) in pairs {
            let scale = a.max_abs() * lam.powi(deg);
            let res = relative_residual(s, &a.scale(lam.powi(deg)), 1e-12);
            if scale > 1e-10 {
                worst.see(res, || format!("{name} {t} deg {deg}"));
            }
        }
    }
    Ok(())
}

fn symmetric_residual(t: &TensorBlock<f64>, slots: &[usize]) -> f64 {
    let scale = t.max_abs().max(1e-300);
    let mut worst: f64 = 0.0;
    for idx in indices(t.dim(), t.rank()) {
        for a in 0..slots.len() {
            for b in a + 1..slots.len() {
                let mut j = idx.clone();
                j.swap(slots[a], slots[b]);
                worst = worst.max((t.get(&idx) - t.get(&j)).abs());
            }
        }
    }
    worst / scale
}

fn structure(m: &MetricInstance64, p: &PointState<f64>, sym: &mut Worst, ycon: &mut Worst, name: &str) -> finsler::Result<()> {
    let b = CurvatureBundle::compute(m, p)?;
    let n = p.y.len();
    let y = &p.y;
    sym.see(symmetric_residual(&b.g, &[0, 1]), || format!("{name} g"));
    sym.see(symmetric_residual(&b.c, &[0, 1, 2]), || format!("{name} C"));
    sym.see(symmetric_residual(&b.l, &[0, 1, 2]), || format!("{name} L"));
    sym.see(symmetric_residual(&b.b, &[1, 2, 3]), || format!("{name} B"));
    sym.see(symmetric_residual(&b.gamma, &[1, 2]), || format!("{name} Gamma"));
    sym.see(b.residuals.stretch_antisymmetry, || format!("{name} Sigma"));
    for t in [&b.g, &b.c, &b.l, &b.b, &b.sigma, &b.r] {
        sym.see(t.symmetry_residual(), || format!("{name} declared"));
    }

    let f = b.f;
    let rel = |v: f64, t: &TensorBlock<f64>| {
        let s = t.max_abs();
        if s > 1e-10 {
            v.abs() / (s * f)
        } else {
            0.0
        }
    };
    let gyy: f64 = indices(n, 2).map(|ij| b.g.get(&ij) * y[ij[0]] * y[ij[1]]).sum();
    ycon.see((gyy - f * f).abs() / (f * f), || format!("{name} g(y,y)=F^2"));
    for i in 0..n {
        let hy: f64 = (0..n).map(|j| b.h.get(&[i, j]) * y[j]).sum();
        ycon.see(rel(hy, &b.h), || format!("{name} h y"));
        let iy: f64 = (0..n).map(|j| b.i.get(&[j]) * y[j]).sum();
        ycon.see(rel(iy, &b.i), || format!("{name} I y"));
        let jy: f64 = (0..n).map(|j| b.j.get(&[j]) * y[j]).sum();
        ycon.see(rel(jy, &b.j), || format!("{name} J y"));
        let ny: f64 = (0..n).map(|j| b.n.get(&[i, j]) * y[j]).sum();
        ycon.see(rel(ny - 2.0 * b.spray.get(&[i]), &b.n), || format!("{name} N y = 2G"));
        let ry: f64 = (0..n).map(|k| b.r1.get(&[i, k]) * y[k]).sum();
        ycon.see(rel(ry, &b.r1), || format!("{name} R y"));
        for j in 0..n {
            let cy: f64 = (0..n).map(|k| b.c.get(&[i, j, k]) * y[k]).sum();
            ycon.see(rel(cy, &b.c), || format!("{name} C y"));
            let ly: f64 = (0..n).map(|k| b.l.get(&[i, j, k]) * y[k]).sum();
            ycon.see(rel(ly, &b.l), || format!("{name} L y"));
            for k in 0..n {
                let by: f64 = (0..n).map(|l| b.b.get(&[i, j, k, l]) * y[l]).sum();
                ycon.see(rel(by, &b.b), || format!("{name} B y"));
            }
        }
    }
    Ok(())
}

fn c10_structure() -> finsler::Result<Outcome> {
    let (mut hom, mut sym, mut ycon) = (Worst::default(), Worst::default(), Worst::default());
    for c in finsler_corpus().iter().chain(&riemannian_corpus()) {
        for (k, p) in points(&c.m, 3, 10).iter().enumerate() {
            let name = format!("{} #{k}", c.name);
            homogeneity(&c.m, p, &mut hom, &name)?;
            structure(&c.m, p, &mut sym, &mut ycon, &name)?;
        }
    }

    let mut degen = Worst::default();
    for c in riemannian_corpus() {
        for (k, p) in points(&c.m, 5, 11).iter().enumerate() {
            let b = CurvatureBundle::compute(&c.m, p)?;
            for (t, v) in b.norms() {
                if matches!(t, "C" | "I" | "B" | "E" | "L" | "J" | "Sigma") {
                    degen.see(v, || format!("{} #{k} {t}", c.name));
                }
            }
        }
    }

    let mut sphere_k = Worst::default();
    for n in [2, 3] {
        let m = build_metric::<f64>(&MetricSpec::round_sphere(n))?;
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for p in points(&m, 20, 12) {
            match flag_curvature(&m, &p, &unit_vector(n, &mut rng)) {
                Ok(k) => sphere_k.see((k - 1.0).abs(), || format!("sphere-{n}")),
                Err(Error::DegenerateFlag) => {}
                Err(e) => return Err(e),
            }
        }
    }

    let mut holo = Worst::default();
    for c in [
        named("sphere-2", MetricSpec::round_sphere(2)),
        named("riemannian-2", riemannian_2d()),
        named("euclidean-2", MetricSpec::euclidean(2)),
    ] {
        for mode in [HolonomyMode::Nonlinear, HolonomyMode::Linear { support: vec![1.0, 0.3] }] {
            let e = parallelogram_holonomy(
                &c.m,
                &[0.2, 0.1],
                &[1.0, 0.0],
                &[0.3, 1.0],
                &[0.4, -1.0],
                &[0.05, 0.1, 0.2],
                &mode,
                &OdeOptions::default(),
            )?;
            for d in &e.defects {
                holo.see(*d, || format!("{} {:?}", c.name, mode));
            }
        }
    }

    Ok(Outcome {
        pass: hom.value <= 1e-8
            && sym.value <= 1e-10
            && ycon.value <= 1e-9
            && degen.value <= 1e-10
            && sphere_k.value <= 1e-6
            && holo.value <= 1e-9,
        detail: format!(
            "homogeneity {} symmetry {} y-contraction {} Riemannian non-Riemannian-tensors {} sphere |K-1| {} parallelogram {}",
            hom.show(),
            sym.show(),
            ycon.show(),
            degen.show(),
            sphere_k.show(),
            holo.show()
        ),
    })
}

fn main() -> ExitCode {
    let checks: [(u32, &str, Check); 10] = [
        (1, "funk relative stretch ratio c = -1", c1_funk_relative_stretch),
        (2, "funk constant negative flag curvature", c2_funk_flag_curvature),
        (3, "constant flag curvature chain", c3_constant_flag_chain),
        (4, "Bianchi identities", c4_bianchi),
        (5, "stretch routes and R-quadratic stretch", c5_stretch_routes),
        (6, "Landsberg routes and metric derivatives", c6_landsberg_routes),
        (7, "semi-C-reducible fit on Randers metrics", c7_semi_c),
        (8, "2-D Berwald frame and product identity", c8_berwald_frame),
        (9, "scalar flows", c9_scalar_flows),
        (10, "structural properties", c10_structure),
    ];
    let filter: Option<u32> = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let start = Instant::now();
    let mut regressions = Vec::new();
    for (id, title, f) in checks {
        if filter.is_some_and(|k| k != id) {
            continue;
        }
        let t0 = Instant::now();
        let (pass, detail) = match f() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        println!(
            "criterion {id:>2} {}: {title}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64()
        );
        if pass == KNOWN_UNATTAINABLE.contains(&id) {
            regressions.push(id);
        }
    }
    let total = start.elapsed();
    println!("acceptance suite finished in {:.1}s", total.as_secs_f64());
    if total > Duration::from_secs(600) {
        println!("runtime exceeds 10 min");
        return ExitCode::FAILURE;
    }
    if !regressions.is_empty() {
        println!("unexpected outcome for criteria {regressions:?}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
