//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Runs without the libtest harness so the lines are always
//! shown.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sphamoeba::kuratowski::{coverage_gap, directed_discrepancy};
use sphamoeba::matrixkit::ComplexMatrix;
use sphamoeba::quatgeom::cosh_dist_pair;
use sphamoeba::series::PuiseuxSeries;
use sphamoeba::slog::{
    amoeba, boundary_group3, image_contains_with_slack, preimage_pointed_pairs, slog, AmoebaConfig,
};
use sphamoeba::spaces::{
    involution_sl2t, kirwan_sl2t, phi_extended_pointed_pairs, rho_sl2t, FamilyId, SpacePoint,
};
use sphamoeba::tropical::{
    curve_battery, generic_valuation, limit_check, strop, Curve, CurveFamily,
};

struct Outcome {
    checks: Vec<(String, bool)>,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, what: impl Into<String>, ok: bool) {
        self.checks.push((what.into(), ok));
    }

    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }

    fn runtime(&mut self, start: Instant, budget: Duration) {
        let took = start.elapsed();
        self.check(
            format!("runtime {:.2}s < {}s", took.as_secs_f64(), budget.as_secs()),
            took < budget,
        );
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|(_, ok)| *ok)
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn criterion_1() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for id in FamilyId::SHIPPED {
        let base = id.phi_all(&id.base_point()).unwrap();
        let worst_base = base.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        out.check(format!("{id}: |phi(base) - 1| = {worst_base:.1e} < 1e-12"), worst_base < 1e-12);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let p = id.sample_point(&mut rng).unwrap();
            let k = id.sample_compact(&mut rng);
            let a = id.phi_all(&p).unwrap();
            let b = id.phi_all(&id.act_compact(&k, &p).unwrap()).unwrap();
            for (x, y) in a.iter().zip(&b) {
                worst = worst.max(rel(*y, *x));
            }
        }
        out.check(format!("{id}: K-invariance rel dev {worst:.1e} < 1e-9"), worst < 1e-9);
    }
    out.runtime(start, Duration::from_secs(10));
    out
}

fn criterion_2() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let mut targets = Vec::new();
    let step = 6.0 / 13.0;
    // Lattice points with i + j <= 13, i.e. a + b <= 0; b = -a on the diagonal.
    for i in 0..14usize {
        for j in 0..14 - i {
            let a = -3.0 + step * i as f64;
            let b = if i + j == 13 { -a } else { -3.0 + step * j as f64 };
            targets.push((a, b));
        }
    }
    out.check(format!("{} grid targets (at least 100)", targets.len()), targets.len() >= 100);
    for n in [3, 4] {
        let id = FamilyId::PointedPairs(n);
        for t in [0.5, 0.1] {
            let cloud = amoeba(id, t, &AmoebaConfig::new(10_000, 7)).unwrap();
            let worst = cloud.points.iter().map(|q| q[0] + q[1]).fold(f64::MIN, f64::max);
            out.check(
                format!("{id} t={t}: max(q1+q2) over {} samples = {worst:.2e} <= 1e-9", cloud.points.len()),
                cloud.points.len() == 10_000 && worst <= 1e-9,
            );
            let mut miss = 0.0f64;
            for &(a, b) in &targets {
                let q = slog(id, t, &preimage_pointed_pairs(n, t, a, b).unwrap()).unwrap();
                miss = miss.max((q[0] - a).abs().max((q[1] - b).abs()));
            }
            out.check(format!("{id} t={t}: preimage miss {miss:.1e} <= 1e-9"), miss <= 1e-9);
        }
    }
    out.runtime(start, Duration::from_secs(30));
    out
}

fn criterion_3() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let id = FamilyId::Group(3);
    let ts = [0.5, 0.2, 0.05, 0.01];
    let grid: Vec<f64> = (0..200).map(|k| 100f64.powf(k as f64 / 199.0)).collect();
    let mut worst = 0.0f64;
    for &t in &ts {
        let curves = boundary_group3(t, &grid).unwrap();
        for (x, q) in grid.iter().zip(&curves.first) {
            let formula = [
                ((2.0 * x.powi(3) + 1.0) / (3.0 * x * x)).ln() / t.ln(),
                ((2.0 + x.powi(3)) / (3.0 * x)).ln() / t.ln(),
            ];
            // Independent path: squared singular values (x, x, 1/x²).
            let s = x.sqrt();
            let p = SpacePoint::Group(ComplexMatrix::from_diagonal(&[c(s, 0.0), c(s, 0.0), c(1.0 / x, 0.0)]));
            let via_phi = slog(id, t, &p).unwrap();
            for k in 0..2 {
                worst = worst.max((q[k] - formula[k]).abs()).max((q[k] - via_phi[k]).abs());
            }
        }
    }
    out.check(format!("boundary tracer max error {worst:.1e} < 1e-12"), worst < 1e-12);
    let cone = id.valuation_cone();
    let rays_ok = cone.rays() == [vec![-2.0, -1.0], vec![-1.0, -2.0]];
    out.check("cone rays (-2,-1), (-1,-2)", rays_ok);
    let mut disc = Vec::new();
    for &t in &ts {
        let cloud = amoeba(id, t, &AmoebaConfig::new(10_000, 11)).unwrap();
        let outside = cloud
            .points
            .iter()
            .filter(|q| !image_contains_with_slack(id, t, q, 1e-9).unwrap())
            .count();
        out.check(format!("t={t}: {outside} of 10^4 points outside the predicate region"), outside == 0);
        disc.push(directed_discrepancy(&cloud, &cone, 5.0).unwrap());
    }
    let strict = disc.windows(2).all(|w| w[1] < w[0]);
    out.check(format!("discrepancy strictly decreasing over t = {ts:?}: {disc:?}"), strict);
    let last = *disc.last().unwrap();
    out.check(format!("discrepancy at t=0.01 is {last:.3e} < 0.15"), last < 0.15);
    out.runtime(start, Duration::from_secs(60));
    out
}

fn criterion_4() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let id2 = FamilyId::BasicAffine(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let p = id2.sample_point(&mut rng).unwrap();
        let phi = |k: u32| id2.phi_weight(&[k], &p).unwrap();
        for k in 1..=4 {
            for l in 1..=4 {
                worst = worst.max(rel(phi(k) * phi(l), phi(k + l)));
            }
        }
    }
    out.check(format!("SL2/U phi_k phi_l = phi_(k+l) rel err {worst:.1e} < 1e-9"), worst < 1e-9);
    let id3 = FamilyId::BasicAffine(3);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let t: f64 = rng.gen_range(0.05..0.9);
        let t1 = Complex64::from_polar(rng.gen_range(0.05..20.0), rng.gen_range(0.0..6.3));
        let t2 = Complex64::from_polar(rng.gen_range(0.05..20.0), rng.gen_range(0.0..6.3));
        let p = SpacePoint::BasicAffine(ComplexMatrix::from_diagonal(&[t1, t2 / t1, t2.inv()]));
        let q = slog(id3, t, &p).unwrap();
        let expect = [t1.norm_sqr().ln() / t.ln(), t2.norm_sqr().ln() / t.ln()];
        worst = worst.max((q[0] - expect[0]).abs()).max((q[1] - expect[1]).abs());
    }
    out.check(format!("SL3 diagonal cosets exact to {worst:.1e} < 1e-12"), worst < 1e-12);
    let mut cfg = AmoebaConfig::new(10_000, 4);
    cfg.window = Some(3.0);
    cfg.stratified = true;
    let cloud = amoeba(id3, 0.1, &cfg).unwrap();
    let gap = coverage_gap(&id3.valuation_cone(), &cloud, 3.0, 0.25).unwrap();
    out.check(format!("coverage gap {gap:.3} < 2h = 0.5"), gap < 0.5);
    out
}

fn criterion_5() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let id = FamilyId::Triangles;
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let p = id.sample_point(&mut rng).unwrap();
        let SpacePoint::Triangles(m) = &p else { unreachable!() };
        let phi = id.phi_all(&p).unwrap();
        for (k, (i, j)) in [(0, 1), (0, 2), (1, 2)].into_iter().enumerate() {
            worst = worst.max(rel(phi[k], cosh_dist_pair(&m[i], &m[j]).unwrap()));
        }
    }
    out.check(format!("phi vs cosh distance rel err {worst:.1e} < 1e-9"), worst < 1e-9);
    let cone = id.valuation_cone();
    let rays_ok = cone.rays() == [vec![-1.0, -1.0, 0.0], vec![-1.0, 0.0, -1.0], vec![0.0, -1.0, -1.0]];
    out.check("cone rays (-1,-1,0), (-1,0,-1), (0,-1,-1)", rays_ok);
    let ts = [0.5, 0.1, 0.02];
    let mut disc = Vec::new();
    for &t in &ts {
        let cloud = amoeba(id, t, &AmoebaConfig::new(10_000, 15)).unwrap();
        let mut bad = 0;
        let mut low = f64::INFINITY;
        for q in &cloud.points {
            let [x, y, z] = [q[0], q[1], q[2]].map(|v| t.powf(v));
            low = low.min(1.0 + 2.0 * x * y * z - x * x - y * y - z * z);
            if 1.0 + 2.0 * x * y * z - x * x - y * y - z * z < -1e-9 || x.min(y).min(z) < 1.0 - 1e-9 {
                bad += 1;
            }
        }
        out.check(format!("t={t}: {bad} points violate the pulled-back inequality (min value {low:.2e})"), bad == 0);
        disc.push(directed_discrepancy(&cloud, &cone, 4.0).unwrap());
    }
    let strict = disc.windows(2).all(|w| w[1] < w[0]);
    out.check(format!("discrepancy decreasing over t = {ts:?}: {disc:?}"), strict);
    out.runtime(start, Duration::from_secs(60));
    out
}

fn criterion_6() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let y = CurveFamily::Sl2Plane.highest_weight_function(0).unwrap();
    let mut mismatches = 0;
    for _ in 0..50 {
        let mut coords = Vec::new();
        let mut orders = Vec::new();
        for _ in 0..2 {
            let lo = rng.gen_range(-5..6i64);
            let coeffs: Vec<Complex64> = (0..rng.gen_range(1..4))
                .map(|_| c(rng.gen_range(0.5..2.0) * if rng.gen() { 1.0 } else { -1.0 }, rng.gen_range(-1.0..1.0)))
                .collect();
            orders.push(lo);
            coords.push(PuiseuxSeries::laurent(lo, &coeffs));
        }
        let curve = Curve::new(CurveFamily::Sl2Plane, coords).unwrap();
        let v = generic_valuation(&y, &curve, &mut rng, 8).unwrap();
        if v != Rational64::from_integer(orders[0].min(orders[1])) {
            mismatches += 1;
        }
    }
    out.check(format!("plane curves: {mismatches} of 50 differ from min(ord x, ord y)"), mismatches == 0);
    let mut mismatches = 0;
    for _ in 0..30 {
        let a = rng.gen_range(-5..6i64);
        let b = rng.gen_range(-5..6i64);
        let e = [a, b, -a - b];
        let curve = Curve::diagonal(FamilyId::Group(3), &e).unwrap();
        let oracle: Vec<Rational64> = (1..=2)
            .map(|k| {
                let best = if k == 1 {
                    *e.iter().min().unwrap()
                } else {
                    (0..3).flat_map(|i| (i + 1..3).map(move |j| (i, j))).map(|(i, j)| e[i] + e[j]).min().unwrap()
                };
                Rational64::from_integer(best)
            })
            .collect();
        if strop(&curve, &mut rng, 8).unwrap() != oracle {
            mismatches += 1;
        }
    }
    out.check(format!("group3 diagonal curves: {mismatches} of 30 differ from the subset-sum oracle"), mismatches == 0);
    let battery = curve_battery();
    let families: std::collections::BTreeSet<String> =
        battery.iter().map(|nc| nc.curve.family().to_string()).collect();
    out.check(
        format!("battery has {} curves over {} families", battery.len(), families.len()),
        battery.len() >= 10 && families.len() >= 4,
    );
    let t = 1e-4;
    let mut failing = Vec::new();
    for nc in &battery {
        for i in 0..nc.curve.family().rank() {
            let table = limit_check(&nc.curve, i, &[t], &mut rng, 8).unwrap();
            let row = &table.rows[0];
            if !(row.deviation < 0.05) {
                failing.push(format!(
                    "{} [generator {}]: dev {:.3} (extrapolated {:.2e} off)",
                    nc.name,
                    i + 1,
                    row.deviation,
                    (row.extrapolated.unwrap_or(f64::NAN) - row.target).abs()
                ));
            }
        }
    }
    out.check(
        format!("limit_check |log_t phi - 2v| < 0.05 at t=1e-4: {} generator checks fail", failing.len()),
        failing.is_empty(),
    );
    for f in failing {
        out.note(f);
    }
    out
}

fn criterion_7() -> Outcome {
    let mut out = Outcome::new();
    for n in [3, 4] {
        let id = FamilyId::PointedPairs(n);
        let mut rng = ChaCha8Rng::seed_from_u64(107 + n as u64);
        let c = (n as f64 - 1.0) / n as f64;
        let mut violations = 0;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for _ in 0..10_000 {
            let p = id.sample_point(&mut rng).unwrap();
            let phi = id.phi_all(&p).unwrap();
            let ext = phi_extended_pointed_pairs(&p).unwrap();
            if phi[0] * phi[1] < c * ext - 1e-12 {
                violations += 1;
            }
            let ratio = phi[0] * phi[1] / ext;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        out.check(format!("{id}: {violations} violations of phi1 phi2 >= {c:.3} phi_ext"), violations == 0);
        out.check(format!("{id}: ratio spread {:.3e} > 1e-3", hi - lo), hi - lo > 1e-3);
    }
    out
}

fn criterion_8() -> Outcome {
    let mut out = Outcome::new();
    let id = FamilyId::Sl2ModT;
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let (mut min_phi, mut bad_rho, mut bad_kirwan, mut swap, mut oracle) = (f64::INFINITY, 0, 0, 0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let p = id.sample_point(&mut rng).unwrap();
        let SpacePoint::Sl2ModT { z, w } = &p else { unreachable!() };
        let phi = id.phi(0, &p).unwrap();
        let rho = rho_sl2t(&p).unwrap();
        let kir = kirwan_sl2t(&p).unwrap();
        min_phi = min_phi.min(phi);
        if !(rho > 0.0 && rho <= 1.0) {
            bad_rho += 1;
        }
        if !(0.0..=0.5).contains(&kir) {
            bad_kirwan += 1;
        }
        // Independent sine-squared of the angle between the lines.
        let nz = z[0].norm_sqr() + z[1].norm_sqr();
        let nw = w[0].norm_sqr() + w[1].norm_sqr();
        let cross = (z[0] * w[1] - z[1] * w[0]).norm_sqr() / (nz * nw);
        oracle = oracle
            .max(rel(phi, 1.0 / cross - 0.5))
            .max((rho - (1.0 - 4.0 * kir * kir)).abs());
        let q = involution_sl2t(&p).unwrap();
        swap = swap
            .max((id.phi(0, &q).unwrap() - phi).abs() / phi)
            .max((rho_sl2t(&q).unwrap() - rho).abs())
            .max((kirwan_sl2t(&q).unwrap() - kir).abs());
    }
    out.check(format!("min phi2 over 10^4 samples {min_phi:.6} >= 1/2 - 1e-12"), min_phi >= 0.5 - 1e-12);
    let ortho = SpacePoint::Sl2ModT {
        z: [c(1.0, 0.0), c(1.0, 0.0)],
        w: [c(-1.0, 0.0), c(1.0, 0.0)],
    };
    let at = id.phi(0, &ortho).unwrap();
    out.check(format!("phi2((1,1),(-1,1)) = {at} within 1e-12 of 1/2"), (at - 0.5).abs() < 1e-12);
    out.check(format!("{bad_rho} samples with rho outside (0,1]"), bad_rho == 0);
    out.check(format!("{bad_kirwan} samples with Kirwan value outside [0,1/2]"), bad_kirwan == 0);
    let diag = SpacePoint::Sl2ModT {
        z: [c(1.0, 0.0), c(0.0, 0.0)],
        w: [c(1.0, 0.0), c(0.0, 0.0)],
    };
    let kd = kirwan_sl2t(&diag).unwrap();
    out.check(format!("Kirwan value on the diagonal {kd} = 1/2"), (kd - 0.5).abs() < 1e-12);
    out.check(format!("factor swap deviation {swap:.1e} < 1e-12"), swap < 1e-12);
    out.check(format!("closed-form cross-check deviation {oracle:.1e} < 1e-9"), oracle < 1e-9);
    out
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("normalization and K-invariance", criterion_1),
        ("exact image equality for pointed pairs", criterion_2),
        ("group3 boundary and convergence", criterion_3),
        ("horospherical case", criterion_4),
        ("triangle space", criterion_5),
        ("tropicalization", criterion_6),
        ("tail inequality and non-multiplicativity", criterion_7),
        ("SL2/T suite", criterion_8),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        let verdict = if outcome.passed() { "PASS" } else { "FAIL" };
        println!("criterion {} {verdict}: {name}", k + 1);
        for (what, ok) in &outcome.checks {
            println!("    [{}] {what}", if *ok { "ok" } else { "FAIL" });
        }
        for note in &outcome.notes {
            println!("    note: {note}");
        }
        if !outcome.passed() {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
