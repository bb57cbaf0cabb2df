use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{PointState, Tower};
use crate::error::Result;
use crate::metric::{unit_vector, MetricInstance};
use crate::scalar::{lit, to_f64, Real};

/// Per-class thresholds on the max-norm of the defining tensor, evaluated
/// at points with `F(x, y) = 1`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub riemannian: f64,
    pub berwald: f64,
    pub landsberg: f64,
    pub weak_landsberg: f64,
    pub stretch: f64,
    pub r_quadratic: f64,
    pub weak_berwald: f64,
}

impl Thresholds {
    pub fn uniform(t: f64) -> Self {
        Thresholds {
            riemannian: t,
            berwald: t,
            landsberg: t,
            weak_landsberg: t,
            stretch: t,
            r_quadratic: t,
            weak_berwald: t,
        }
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds::uniform(1e-8)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FlagVerdict {
    pub holds: bool,
    /// Largest max-norm over the samples.
    pub residual: f64,
    pub threshold: f64,
}

impl FlagVerdict {
    fn new(residual: f64, threshold: f64) -> Self {
        FlagVerdict {
            holds: residual <= threshold,
            residual,
            threshold,
        }
    }
}

/// Consistency of the implications between class flags.
#[derive(Clone, Debug, Serialize)]
pub struct ChainCheck {
    pub consistent: bool,
    pub violations: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassificationVerdict {
    /// `C = 0`
    pub riemannian: FlagVerdict,
    /// `B = 0`
    pub berwald: FlagVerdict,
    /// `L = 0`
    pub landsberg: FlagVerdict,
    /// `J = 0`
    pub weak_landsberg: FlagVerdict,
    /// `Σ = 0`
    pub stretch: FlagVerdict,
    /// `R_jⁱ_kl·m = 0`
    pub r_quadratic: FlagVerdict,
    /// `E = 0`
    pub weak_berwald: FlagVerdict,
    pub points: usize,
    /// Samples where the tower could not be evaluated.
    pub failed_points: usize,
    pub seed: u64,
    pub chain: ChainCheck,
}

impl ClassificationVerdict {
    pub fn flags(&self) -> [(&'static str, FlagVerdict); 7] {
        [
            ("riemannian", self.riemannian),
            ("berwald", self.berwald),
            ("landsberg", self.landsberg),
            ("weak_landsberg", self.weak_landsberg),
            ("stretch", self.stretch),
            ("r_quadratic", self.r_quadratic),
            ("weak_berwald", self.weak_berwald),
        ]
    }
}

/// Inflation allowed between consecutive levels of the implication chain.
const CHAIN_FACTOR: f64 = 10.0;

fn norms<T: Real>(m: &MetricInstance<T>, p: &PointState<T>) -> Result<[f64; 7]> {
    let t = Tower::build(m, p)?;
    let rv = t.geo.vertical(&t.r)?;
    let mx = |x: &crate::tensor::JetTensor<T>| to_f64(x.value().max_abs());
    Ok([mx(&t.c), mx(&t.b), mx(&t.l), mx(&t.j), mx(&t.sigma), mx(&rv), mx(&t.e)])
}

fn chain(v: &ClassificationVerdict) -> ChainCheck {
    let mut violations = Vec::new();
    let links = [
        ("riemannian", v.riemannian, "berwald", v.berwald),
        ("berwald", v.berwald, "landsberg", v.landsberg),
        ("landsberg", v.landsberg, "stretch", v.stretch),
        ("landsberg", v.landsberg, "weak_landsberg", v.weak_landsberg),
        ("berwald", v.berwald, "weak_berwald", v.weak_berwald),
        ("riemannian", v.riemannian, "r_quadratic", v.r_quadratic),
    ];
    for (a, fa, b, fb) in links {
        if fa.holds && fb.residual > CHAIN_FACTOR * fb.threshold {
            violations.push(format!("{a} holds but {b} residual is {:.3e}", fb.residual));
        }
    }
    ChainCheck {
        consistent: violations.is_empty(),
        violations,
    }
}

/// Evaluates the class-defining tensors at `samples` seeded points of the
/// chart (unit directions rescaled to `F = 1`) and compares their largest
/// norms with the thresholds.
pub fn classify<T: Real>(
    m: &MetricInstance<T>,
    samples: usize,
    seed: u64,
    thresholds: &Thresholds,
) -> ClassificationVerdict {
    let n = m.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<(Vec<f64>, Vec<f64>)> = (0..samples.max(1))
        .map(|_| (m.chart().sample(n, &mut rng), unit_vector(n, &mut rng)))
        .collect();
    let results: Vec<Option<[f64; 7]>> = raw
        .par_iter()
        .map(|(x, y)| {
            let xt: Vec<T> = x.iter().map(|&v| lit(v)).collect();
            let yt: Vec<T> = y.iter().map(|&v| lit(v)).collect();
            let f = m.value(&xt, &yt).ok()?;
            let yt: Vec<T> = yt.iter().map(|&v| v / f).collect();
            norms(m, &PointState::new(xt, yt)).ok()
        })
        .collect();
    let ok: Vec<[f64; 7]> = results.iter().flatten().copied().collect();
    let worst = |k: usize| {
        if ok.is_empty() {
            f64::INFINITY
        } else {
            ok.iter().fold(0.0f64, |a, r| a.max(r[k]))
        }
    };
    let th = thresholds;
    let mut v = ClassificationVerdict {
        riemannian: FlagVerdict::new(worst(0), th.riemannian),
        berwald: FlagVerdict::new(worst(1), th.berwald),
        landsberg: FlagVerdict::new(worst(2), th.landsberg),
        weak_landsberg: FlagVerdict::new(worst(3), th.weak_landsberg),
        stretch: FlagVerdict::new(worst(4), th.stretch),
        r_quadratic: FlagVerdict::new(worst(5), th.r_quadratic),
        weak_berwald: FlagVerdict::new(worst(6), th.weak_berwald),
        points: ok.len(),
        failed_points: results.len() - ok.len(),
        seed,
        chain: ChainCheck {
            consistent: true,
            violations: Vec::new(),
        },
    };
    v.chain = chain(&v);
    v
}
