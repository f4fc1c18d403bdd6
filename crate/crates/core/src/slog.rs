//! Spherical logarithm maps, amoeba point clouds, closed-form image predicates
//! and explicit preimages.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrixkit::ComplexMatrix;
use crate::spaces::{FamilyId, SpaceError, SpacePoint};

/// Points drawn per RNG substream.
pub const CHUNK_SIZE: usize = 256;
/// Half-width of the box used for stratified targets when no window is set.
pub const DEFAULT_STRATA_BOX: f64 = 3.0;
/// Relative tolerance of the boundary-curve parameter inversion.
pub const BISECTION_TOLERANCE: f64 = 1e-10;

const STRATA_STREAM: u64 = u64::MAX;

#[derive(Debug, Error)]
pub enum SlogError {
    #[error("t = {0} is not in (0, 1)")]
    InvalidT(f64),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("no closed-form image predicate for {0}")]
    Unsupported(FamilyId),
    #[error("(a, b) = ({a}, {b}) has a + b > 0, outside the image")]
    Inadmissible { a: f64, b: f64 },
    #[error("expected {expected} coordinates, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("boundary parameter x = {0} is below 1")]
    BadParameter(f64),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("csv: {0}")]
    CsvFormat(String),
}

fn check_t(t: f64) -> Result<(), SlogError> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(SlogError::InvalidT(t))
    }
}

fn log_t(t: f64, v: f64) -> f64 {
    // Adding zero turns -0.0 into 0.0.
    v.ln() / t.ln() + 0.0
}

/// `sLog_{Γ,t}(p) = (log_t φ_1(p), …, log_t φ_s(p))`.
pub fn slog(family: FamilyId, t: f64, p: &SpacePoint) -> Result<Vec<f64>, SlogError> {
    check_t(t)?;
    Ok(family
        .phi_all(p)?
        .into_iter()
        .map(|v| log_t(t, v))
        .collect())
}

/// Sampling parameters for [`amoeba`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmoebaConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Keep only points in the max-norm box `[-R, R]^s`.
    pub window: Option<f64>,
    /// Replace part of the random draws with constructed points aimed at a
    /// jittered grid of cone targets (group, basic affine and pointed pairs).
    pub stratified: bool,
}

impl AmoebaConfig {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        AmoebaConfig {
            n_samples,
            seed,
            window: None,
            stratified: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmoebaCloud {
    pub family: FamilyId,
    pub t: f64,
    pub points: Vec<Vec<f64>>,
    pub seed: u64,
    pub n_samples: usize,
    pub window: Option<f64>,
    pub stratified: bool,
}

fn chunk_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `n` points with one ChaCha substream per chunk of [`CHUNK_SIZE`], so
/// the output depends only on `(family, n, seed)`.
pub fn sample_points(family: FamilyId, n: usize, seed: u64) -> Result<Vec<SpacePoint>, SlogError> {
    let chunks = n.div_ceil(CHUNK_SIZE);
    let parts: Result<Vec<Vec<SpacePoint>>, SpaceError> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c as u64);
            let len = CHUNK_SIZE.min(n - c * CHUNK_SIZE);
            (0..len).map(|_| family.sample_point(&mut rng)).collect()
        })
        .collect();
    Ok(parts?.into_iter().flatten().collect())
}

fn in_window(q: &[f64], window: Option<f64>) -> bool {
    window.map_or(true, |r| q.iter().all(|v| v.abs() <= r))
}

/// Targets of a jittered grid: `m^s` cells of `[-r, r]^s`, one uniform point
/// per cell, with `m^s <= budget`.
pub fn jittered_grid<R: Rng + ?Sized>(s: usize, r: f64, budget: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut m = (budget as f64).powf(1.0 / s as f64).floor() as usize;
    while m > 1 && m.pow(s as u32) > budget {
        m -= 1;
    }
    if m == 0 {
        return Vec::new();
    }
    let cell = 2.0 * r / m as f64;
    let total = m.pow(s as u32);
    (0..total)
        .map(|mut idx| {
            (0..s)
                .map(|_| {
                    let k = idx % m;
                    idx /= m;
                    -r + cell * (k as f64 + rng.gen::<f64>())
                })
                .collect()
        })
        .collect()
}

/// A point whose sLog is (exactly or asymptotically) `q`, for families with
/// an explicit construction; `None` when `q` is outside the cone or the
/// family has none.
pub fn constructed_point(family: FamilyId, t: f64, q: &[f64]) -> Result<Option<SpacePoint>, SlogError> {
    check_t(t)?;
    if q.len() != family.rank() {
        return Err(SlogError::Dimension {
            expected: family.rank(),
            got: q.len(),
        });
    }
    if !family.valuation_cone().contains(q, 0.0) {
        return Ok(None);
    }
    Ok(match family {
        FamilyId::Group(n) => Some(diagonal_group(n, t, q)?),
        FamilyId::BasicAffine(n) => Some(diagonal_coset_basic_affine(n, t, q)?),
        FamilyId::PointedPairs(n) => Some(preimage_pointed_pairs(n, t, q[0], q[1])?),
        FamilyId::Triangles | FamilyId::Sl2ModT => None,
    })
}

/// Spherical amoeba of the whole space as a point cloud.
pub fn amoeba(family: FamilyId, t: f64, cfg: &AmoebaConfig) -> Result<AmoebaCloud, SlogError> {
    check_t(t)?;
    let mut targets = Vec::new();
    if cfg.stratified && !matches!(family, FamilyId::Triangles | FamilyId::Sl2ModT) {
        let mut rng = chunk_rng(cfg.seed, STRATA_STREAM);
        let r = cfg.window.unwrap_or(DEFAULT_STRATA_BOX);
        targets = jittered_grid(family.rank(), r, cfg.n_samples / 2, &mut rng);
    }
    let n_random = cfg.n_samples - targets.len();
    let sampled = sample_points(family, n_random, cfg.seed)?;
    let mut points: Vec<Vec<f64>> = sampled
        .par_iter()
        .map(|p| slog(family, t, p))
        .collect::<Result<_, _>>()?;
    for q in &targets {
        if let Some(p) = constructed_point(family, t, q)? {
            points.push(slog(family, t, &p)?);
        }
    }
    points.retain(|q| in_window(q, cfg.window));
    Ok(AmoebaCloud {
        family,
        t,
        points,
        seed: cfg.seed,
        n_samples: cfg.n_samples,
        window: cfg.window,
        stratified: cfg.stratified,
    })
}

impl AmoebaCloud {
    /// Writes `q1,…,qs` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SlogError> {
        let mut w = csv::Writer::from_writer(out);
        let s = self.family.rank();
        w.write_record((1..=s).map(|i| format!("q{i}")))?;
        for q in &self.points {
            w.write_record(q.iter().map(|v| format!("{v:.16e}")))?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Reads points written by [`AmoebaCloud::write_csv`]; metadata other than
    /// the family and `t` is not stored in the file.
    pub fn read_csv<R: Read>(input: R, family: FamilyId, t: f64) -> Result<Self, SlogError> {
        check_t(t)?;
        let mut r = csv::Reader::from_reader(input);
        let s = family.rank();
        let header_len = r.headers()?.len();
        if header_len != s {
            return Err(SlogError::Dimension {
                expected: s,
                got: header_len,
            });
        }
        let mut points = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let q = rec
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| SlogError::CsvFormat(format!("row {}: {e}", line + 2)))?;
            points.push(q);
        }
        Ok(AmoebaCloud {
            family,
            t,
            n_samples: points.len(),
            points,
            seed: 0,
            window: None,
            stratified: false,
        })
    }
}

/// `((2x³+1)/(3x²), (x³+2)/(3x))`: the two spherical functions of group(3)
/// at squared singular values `(x, x, 1/x²)`.
pub fn group3_boundary_phi(x: f64) -> (f64, f64) {
    ((2.0 * x.powi(3) + 1.0) / (3.0 * x * x), (x.powi(3) + 2.0) / (3.0 * x))
}

/// Both boundary curves of the group(3) amoeba on `x_grid ⊂ [1, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurves {
    pub x: Vec<f64>,
    /// `(log_t((2x³+1)/(3x²)), log_t((x³+2)/(3x)))`.
    pub first: Vec<[f64; 2]>,
    /// The coordinate swap of `first`.
    pub second: Vec<[f64; 2]>,
}

pub fn boundary_group3(t: f64, x_grid: &[f64]) -> Result<BoundaryCurves, SlogError> {
    check_t(t)?;
    let mut first = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        if !(x >= 1.0) {
            return Err(SlogError::BadParameter(x));
        }
        let (a, b) = group3_boundary_phi(x);
        first.push([log_t(t, a), log_t(t, b)]);
    }
    let second = first.iter().map(|&[a, b]| [b, a]).collect();
    Ok(BoundaryCurves {
        x: x_grid.to_vec(),
        first,
        second,
    })
}

impl BoundaryCurves {
    /// CSV with columns `curve,x,q1,q2`; `curve` is 1 or 2.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SlogError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["curve", "x", "q1", "q2"])?;
        for (label, curve) in [("1", &self.first), ("2", &self.second)] {
            for (x, q) in self.x.iter().zip(curve.iter()) {
                w.write_record([
                    label.to_string(),
                    format!("{x:.16e}"),
                    format!("{:.16e}", q[0]),
                    format!("{:.16e}", q[1]),
                ])?;
            }
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Smallest `x >= 1` with `f(x) = y`, for `f` increasing on `[1, ∞)` with
/// `f(1) = 1`.
fn invert_monotone(f: impl Fn(f64) -> f64, y: f64) -> f64 {
    if y <= 1.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (1.0_f64, 2.0_f64);
    while f(hi) < y {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > BISECTION_TOLERANCE * hi {
        let mid = 0.5 * (lo + hi);
        if f(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Closed-form image membership `q ∈ sLog_t(G/H)`, exact up to `slack` in sLog
/// coordinates.
pub fn image_contains_with_slack(
    family: FamilyId,
    t: f64,
    q: &[f64],
    slack: f64,
) -> Result<bool, SlogError> {
    check_t(t)?;
    if q.len() != family.rank() {
        return Err(SlogError::Dimension {
            expected: family.rank(),
            got: q.len(),
        });
    }
    Ok(match family {
        FamilyId::BasicAffine(_) => true,
        FamilyId::PointedPairs(_) => q[0] + q[1] <= slack,
        FamilyId::Sl2ModT => q[0] <= log_t(t, 0.5) + slack,
        FamilyId::Triangles => {
            if q.iter().any(|&v| v > slack) {
                return Ok(false);
            }
            let [x, y, z] = [q[0], q[1], q[2]].map(|v| t.powf(v.min(0.0)));
            1.0 + 2.0 * x * y * z - x * x - y * y - z * z >= -slack
        }
        FamilyId::Group(3) => {
            if q[0] > slack || q[1] > slack {
                return Ok(false);
            }
            let phi1 = t.powf(q[0].min(0.0));
            let x_up = invert_monotone(|x| group3_boundary_phi(x).0, phi1);
            let x_low = invert_monotone(|x| group3_boundary_phi(x).1, phi1);
            // In sLog coordinates the larger φ₂ bound is the smaller q₂ bound.
            let q_min = log_t(t, group3_boundary_phi(x_up).1);
            let q_max = log_t(t, group3_boundary_phi(x_low).0);
            q[1] >= q_min - slack && q[1] <= q_max + slack
        }
        FamilyId::Group(_) => return Err(SlogError::Unsupported(family)),
    })
}

pub fn image_contains(family: FamilyId, t: f64, q: &[f64]) -> Result<bool, SlogError> {
    image_contains_with_slack(family, t, q, 0.0)
}

/// `x = (t^{a/2}, 0, …)`, `y = (t^{-a/2}, √(t^b − t^{-a}), 0, …)`, whose sLog
/// is exactly `(a, b)`.
pub fn preimage_pointed_pairs(n: usize, t: f64, a: f64, b: f64) -> Result<SpacePoint, SlogError> {
    check_t(t)?;
    if a + b > 0.0 {
        return Err(SlogError::Inadmissible { a, b });
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut x = vec![zero; n];
    let mut y = vec![zero; n];
    x[0] = Complex64::new(t.powf(a / 2.0), 0.0);
    y[0] = Complex64::new(t.powf(-a / 2.0), 0.0);
    y[1] = Complex64::new((t.powf(b) - t.powf(-a)).max(0.0).sqrt(), 0.0);
    let p = SpacePoint::PointedPairs { x, y };
    FamilyId::PointedPairs(n).validate(&p)?;
    Ok(p)
}

/// Torus coset `diag(s_1, s_2/s_1, …, 1/s_{n-1})` with `s_i = t^{q_i/2}`, so
/// the `i`-th flag minor sum is exactly `t^{q_i}`.
pub fn diagonal_coset_basic_affine(n: usize, t: f64, q: &[f64]) -> Result<SpacePoint, SlogError> {
    check_t(t)?;
    if q.len() + 1 != n {
        return Err(SlogError::Dimension {
            expected: n - 1,
            got: q.len(),
        });
    }
    let s: Vec<f64> = std::iter::once(1.0)
        .chain(q.iter().map(|v| t.powf(v / 2.0)))
        .chain(std::iter::once(1.0))
        .collect();
    let diag: Vec<Complex64> = (1..=n)
        .map(|i| Complex64::new(s[i] / s[i - 1], 0.0))
        .collect();
    Ok(SpacePoint::BasicAffine(ComplexMatrix::from_diagonal(&diag)))
}

/// `diag(t^{a_1}, …, t^{a_n})` with `a_i = (q_i − q_{i−1})/2`, `q_0 = q_n = 0`.
/// For `q` in the cone the exponents increase, so the sLog tends to `q` as
/// `t → 0`.
pub fn diagonal_group(n: usize, t: f64, q: &[f64]) -> Result<SpacePoint, SlogError> {
    check_t(t)?;
    if q.len() + 1 != n {
        return Err(SlogError::Dimension {
            expected: n - 1,
            got: q.len(),
        });
    }
    let padded: Vec<f64> = std::iter::once(0.0)
        .chain(q.iter().copied())
        .chain(std::iter::once(0.0))
        .collect();
    let diag: Vec<Complex64> = (1..=n)
        .map(|i| Complex64::new(t.powf((padded[i] - padded[i - 1]) / 2.0), 0.0))
        .collect();
    Ok(SpacePoint::Group(ComplexMatrix::from_diagonal(&diag)))
}
