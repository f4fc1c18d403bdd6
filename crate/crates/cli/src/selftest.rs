//! Quick invariant suites behind `sphamoeba selftest`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sphamoeba::kuratowski::dist_point_to_cone;
use sphamoeba::matrixkit::ComplexMatrix;
use sphamoeba::quatgeom::{act, cosh_dist_pair, HPoint};
use sphamoeba::series::PuiseuxSeries;
use sphamoeba::slog::{amoeba, AmoebaConfig};
use sphamoeba::spaces::FamilyId;
use sphamoeba::tropical::{curve_battery, in_valuation_cone, strop};

pub struct SuiteResult {
    pub name: &'static str,
    pub outcome: Result<(), String>,
}

type Suite = fn(&mut ChaCha8Rng) -> Result<(), String>;

const SUITES: [(&str, Suite); 7] = [
    ("series arithmetic", series_suite),
    ("matrix invariants", matrix_suite),
    ("hyperbolic distance", hyperbolic_suite),
    ("spherical function normalisation and K-invariance", spherical_suite),
    ("cone distance", cone_suite),
    ("pointed-pairs image equals cone", image_suite),
    ("tropicalization lands in the cone", tropical_suite),
];

pub fn run_all() -> Vec<SuiteResult> {
    SUITES
        .iter()
        .enumerate()
        .map(|(i, &(name, suite))| {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f + i as u64);
            SuiteResult {
                name,
                outcome: suite(&mut rng),
            }
        })
        .collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Laurent polynomial with a dominant leading coefficient, so inverses keep
/// bounded coefficients.
fn random_laurent(rng: &mut ChaCha8Rng) -> PuiseuxSeries {
    let mut coeffs = vec![Complex64::from_polar(rng.gen_range(1.0..2.0), rng.gen_range(0.0..std::f64::consts::TAU))];
    for _ in 0..rng.gen_range(0..4) {
        coeffs.push(Complex64::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)));
    }
    PuiseuxSeries::laurent(rng.gen_range(-3..4), &coeffs)
}

fn series_suite(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..50 {
        let a = random_laurent(rng);
        let b = random_laurent(rng);
        let back = a.add_series(&b).sub_series(&b);
        let diff = back.sub_series(&a);
        ensure(diff.terms().all(|(_, c)| c.norm() < 1e-12), || {
            format!("(a + b) - b != a for a = {a}")
        })?;
        if a.is_empty() {
            continue;
        }
        let prod = a.mul_series(&a.invert().map_err(|e| e.to_string())?);
        let err = prod.sub_series(&PuiseuxSeries::one());
        ensure(err.terms().all(|(_, c)| c.norm() < 1e-8), || {
            format!("a * a^-1 != 1 for a = {a}")
        })?;
    }
    Ok(())
}

fn matrix_suite(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for n in 2..=4 {
        let a = ComplexMatrix::random_special_linear(n, rng).map_err(|e| e.to_string())?;
        let b = ComplexMatrix::random_special_linear(n, rng).map_err(|e| e.to_string())?;
        let d = a.matmul(&b).det();
        ensure((d - 1.0).norm() < 1e-9, || format!("det(AB) = {d} for n = {n}"))?;
        let u = ComplexMatrix::random_special_unitary(n, rng);
        let s1 = a.singular_values().map_err(|e| e.to_string())?;
        let s2 = u.matmul(&a).singular_values().map_err(|e| e.to_string())?;
        for (x, y) in s1.iter().zip(&s2) {
            ensure((x - y).abs() < 1e-9 * x.max(1.0), || {
                format!("singular values not unitarily invariant: {s1:?} vs {s2:?}")
            })?;
        }
    }
    Ok(())
}

fn hyperbolic_suite(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..50 {
        let a = ComplexMatrix::random_special_linear(2, rng).map_err(|e| e.to_string())?;
        let b = ComplexMatrix::random_special_linear(2, rng).map_err(|e| e.to_string())?;
        let pa = act(HPoint::j(), &a).map_err(|e| e.to_string())?;
        let pb = act(HPoint::j(), &b).map_err(|e| e.to_string())?;
        let direct = pa.cosh_dist(pb);
        let algebraic = cosh_dist_pair(&a, &b).map_err(|e| e.to_string())?;
        ensure((direct - algebraic).abs() < 1e-9 * direct, || {
            format!("cosh distance {direct} vs {algebraic}")
        })?;
    }
    Ok(())
}

fn spherical_suite(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for id in FamilyId::SHIPPED {
        let base = id.phi_all(&id.base_point()).map_err(|e| e.to_string())?;
        ensure(base.iter().all(|v| (v - 1.0).abs() < 1e-12), || {
            format!("{id}: phi(base) = {base:?}")
        })?;
        for _ in 0..20 {
            let p = id.sample_point(rng).map_err(|e| e.to_string())?;
            let k = id.sample_compact(rng);
            let kp = id.act_compact(&k, &p).map_err(|e| e.to_string())?;
            let a = id.phi_all(&p).map_err(|e| e.to_string())?;
            let b = id.phi_all(&kp).map_err(|e| e.to_string())?;
            for (x, y) in a.iter().zip(&b) {
                ensure((x - y).abs() < 1e-9 * x.abs(), || {
                    format!("{id}: phi changed under K from {x} to {y}")
                })?;
            }
        }
    }
    Ok(())
}

fn cone_suite(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for id in FamilyId::SHIPPED {
        let cone = id.valuation_cone();
        for _ in 0..100 {
            let q: Vec<f64> = (0..cone.dim()).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let d = dist_point_to_cone(&q, &cone);
            ensure((d - cone.ray_distance(&q)).abs() < 1e-9, || {
                format!("{id}: face and ray distances disagree at {q:?}")
            })?;
        }
    }
    Ok(())
}

fn image_suite(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let cloud = amoeba(FamilyId::PointedPairs(3), 0.1, &AmoebaConfig::new(1000, rng.gen()))
        .map_err(|e| e.to_string())?;
    match cloud.points.iter().find(|q| q[0] + q[1] > 1e-9) {
        Some(q) => Err(format!("sampled point {q:?} outside q1 + q2 <= 0")),
        None => Ok(()),
    }
}

fn tropical_suite(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for nc in curve_battery() {
        let s = strop(&nc.curve, rng, 8).map_err(|e| format!("{}: {e}", nc.name))?;
        ensure(in_valuation_cone(nc.curve.family(), &s), || {
            format!("{}: strop {s:?} outside the cone", nc.name)
        })?;
    }
    Ok(())
}
