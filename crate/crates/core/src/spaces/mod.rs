//! The five worked families of spherical homogeneous spaces: their points,
//! spherical functions, compact-group actions, samplers and valuation cones.

mod cone;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrixkit::{binomial, standard_complex_gaussian, subsets, ComplexMatrix, MatrixError};

pub use cone::{ConeError, PolyCone, CONE_TOLERANCE};
pub(crate) use cone::{dot, norm, small_subsets, solve_small};

const DET_TOLERANCE: f64 = 1e-9;
const PAIRING_TOLERANCE: f64 = 1e-10;
const DISTINCT_LINES: f64 = 1e-10;
const MIN_SAMPLE_NORM: f64 = 1e-3;
const SAMPLE_RETRIES: usize = 64;
const MAX_DIM: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("unknown family {0:?} (expected group<n>, affineU<n>, pointed<n>, triangles or sl2t)")]
    UnknownFamily(String),
    #[error("point belongs to {got}, expected {expected}")]
    WrongFamily { expected: FamilyId, got: String },
    #[error("generator index {index} out of range for rank {rank}")]
    IndexOutOfRange { index: usize, rank: usize },
    #[error("invalid point: {0}")]
    Invariant(String),
    #[error("weight {0:?} has no spherical function implemented for this family")]
    UnsupportedWeight(Vec<u32>),
    #[error("spherical function evaluated to {0}, expected a positive value")]
    NonPositive(f64),
    #[error("sampler exhausted {0} retries")]
    SamplingExhausted(usize),
    #[error("compact element does not match the family")]
    CompactMismatch,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// One of the shipped family instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum FamilyId {
    /// `SL_n × SL_n` acting on `SL_n`.
    Group(usize),
    /// `SL_n / U`.
    BasicAffine(usize),
    /// `SL_n / SL_{n-1}` as pairs `(x, y)` with `Σ x_i y_i = 1`.
    PointedPairs(usize),
    /// `SL_2³ / SL_2`.
    Triangles,
    /// `SL_2 / T` as pairs of distinct lines in `C²`.
    Sl2ModT,
}

impl FamilyId {
    /// The eight instances exercised by the acceptance suite.
    pub const SHIPPED: [FamilyId; 8] = [
        FamilyId::Group(3),
        FamilyId::Group(4),
        FamilyId::BasicAffine(2),
        FamilyId::BasicAffine(3),
        FamilyId::PointedPairs(3),
        FamilyId::PointedPairs(4),
        FamilyId::Triangles,
        FamilyId::Sl2ModT,
    ];

    /// Number of generators `s` (equal to the rank in every family).
    pub fn rank(self) -> usize {
        match self {
            FamilyId::Group(n) | FamilyId::BasicAffine(n) => n - 1,
            FamilyId::PointedPairs(_) => 2,
            FamilyId::Triangles => 3,
            FamilyId::Sl2ModT => 1,
        }
    }

    /// Labels of the generators `Γ`, in coordinate order.
    pub fn generator_labels(self) -> Vec<String> {
        match self {
            FamilyId::Group(n) => (1..n).map(|i| format!("(w{i},-w{i})")).collect(),
            FamilyId::BasicAffine(n) => (1..n).map(|i| format!("w{i}")).collect(),
            FamilyId::PointedPairs(n) => vec![format!("w{}", n - 1), "w1".into()],
            FamilyId::Triangles => vec!["W12".into(), "W13".into(), "W23".into()],
            FamilyId::Sl2ModT => vec!["2w".into()],
        }
    }

    fn check(self, i: usize) -> Result<(), SpaceError> {
        if i < self.rank() {
            Ok(())
        } else {
            Err(SpaceError::IndexOutOfRange {
                index: i,
                rank: self.rank(),
            })
        }
    }

    /// The point normalising every spherical function to one.
    ///
    /// For `Sl2ModT` this is `([1:0], [1:√2])` rather than `([1:0], [0:1])`:
    /// the latter is where `φ₂` attains its minimum `1/2`, so it cannot also be
    /// the normalisation point. Both lie in the single `G`-orbit.
    pub fn base_point(self) -> SpacePoint {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        match self {
            FamilyId::Group(n) => SpacePoint::Group(ComplexMatrix::identity(n)),
            FamilyId::BasicAffine(n) => SpacePoint::BasicAffine(ComplexMatrix::identity(n)),
            FamilyId::PointedPairs(n) => {
                let mut e1 = vec![zero; n];
                e1[0] = one;
                SpacePoint::PointedPairs {
                    x: e1.clone(),
                    y: e1,
                }
            }
            FamilyId::Triangles => SpacePoint::Triangles([
                ComplexMatrix::identity(2),
                ComplexMatrix::identity(2),
                ComplexMatrix::identity(2),
            ]),
            FamilyId::Sl2ModT => SpacePoint::Sl2ModT {
                z: [one, zero],
                w: [Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0), one],
            },
        }
    }

    pub fn validate(self, p: &SpacePoint) -> Result<(), SpaceError> {
        let wrong = || SpaceError::WrongFamily {
            expected: self,
            got: p.kind().into(),
        };
        let check_sl = |m: &ComplexMatrix, n: usize| -> Result<(), SpaceError> {
            if m.dim() != n {
                return Err(SpaceError::Invariant(format!(
                    "expected a {n}x{n} matrix, got {0}x{0}",
                    m.dim()
                )));
            }
            if !m.is_finite() {
                return Err(SpaceError::Invariant("non-finite matrix entry".into()));
            }
            let d = m.det();
            if (d - 1.0).norm() >= DET_TOLERANCE {
                return Err(SpaceError::Invariant(format!("determinant {d} is not 1")));
            }
            Ok(())
        };
        match (self, p) {
            (FamilyId::Group(n), SpacePoint::Group(a))
            | (FamilyId::BasicAffine(n), SpacePoint::BasicAffine(a)) => check_sl(a, n),
            (FamilyId::PointedPairs(n), SpacePoint::PointedPairs { x, y }) => {
                if x.len() != n || y.len() != n {
                    return Err(SpaceError::Invariant(format!(
                        "expected vectors of length {n}"
                    )));
                }
                let pairing: Complex64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                if !((pairing - 1.0).norm() < PAIRING_TOLERANCE) {
                    return Err(SpaceError::Invariant(format!(
                        "pairing sum x_i y_i = {pairing}, expected 1"
                    )));
                }
                Ok(())
            }
            (FamilyId::Triangles, SpacePoint::Triangles(ms)) => {
                ms.iter().try_for_each(|m| check_sl(m, 2))
            }
            (FamilyId::Sl2ModT, SpacePoint::Sl2ModT { z, w }) => {
                let d = (z[0] * w[1] - z[1] * w[0]).norm();
                if !(d > DISTINCT_LINES) {
                    return Err(SpaceError::Invariant(format!(
                        "lines are not distinct (|z1 w2 - z2 w1| = {d:e})"
                    )));
                }
                Ok(())
            }
            _ => Err(wrong()),
        }
    }

    /// Spherical function of the `i`-th generator (0-based).
    pub fn phi(self, i: usize, p: &SpacePoint) -> Result<f64, SpaceError> {
        self.check(i)?;
        self.validate(p)?;
        let v = match (self, p) {
            (FamilyId::Group(n), SpacePoint::Group(a)) => group_phi(a, n, i + 1),
            (FamilyId::BasicAffine(n), SpacePoint::BasicAffine(a)) => affine_phi(a, n, i + 1),
            (FamilyId::PointedPairs(_), SpacePoint::PointedPairs { x, y }) => {
                sq_norm(if i == 0 { x } else { y })
            }
            (FamilyId::Triangles, SpacePoint::Triangles(ms)) => {
                let (a, b) = TRIANGLE_PAIRS[i];
                triangle_phi(&ms[a], &ms[b])
            }
            (FamilyId::Sl2ModT, SpacePoint::Sl2ModT { z, w }) => sl2t_phi(z, w),
            _ => unreachable!("validated above"),
        };
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(SpaceError::NonPositive(v))
        }
    }

    pub fn phi_all(self, p: &SpacePoint) -> Result<Vec<f64>, SpaceError> {
        (0..self.rank()).map(|i| self.phi(i, p)).collect()
    }

    /// Spherical function of a weight given in generator coordinates.
    ///
    /// Supported beyond the generators themselves: `(1, 1)` for pointed pairs
    /// (the adjoint weight `χ₁ + χ₂`) and every `(k)` for `SL_2 / U`.
    pub fn phi_weight(self, weight: &[u32], p: &SpacePoint) -> Result<f64, SpaceError> {
        let unsupported = || SpaceError::UnsupportedWeight(weight.to_vec());
        if weight.len() != self.rank() {
            return Err(unsupported());
        }
        if weight.iter().sum::<u32>() == 1 {
            let i = weight.iter().position(|&w| w == 1).unwrap();
            return self.phi(i, p);
        }
        match self {
            FamilyId::PointedPairs(_) if weight == [1, 1] => phi_extended_pointed_pairs(p),
            FamilyId::BasicAffine(2) => phi_affine2_weight(p, weight[0]),
            _ => Err(unsupported()),
        }
    }

    /// Draws a point from the family's Gaussian-induced sampler.
    pub fn sample_point<R: Rng + ?Sized>(self, rng: &mut R) -> Result<SpacePoint, SpaceError> {
        Ok(match self {
            FamilyId::Group(n) => SpacePoint::Group(ComplexMatrix::random_special_linear(n, rng)?),
            FamilyId::BasicAffine(n) => {
                SpacePoint::BasicAffine(ComplexMatrix::random_special_linear(n, rng)?)
            }
            FamilyId::Triangles => SpacePoint::Triangles([
                ComplexMatrix::random_special_linear(2, rng)?,
                ComplexMatrix::random_special_linear(2, rng)?,
                ComplexMatrix::random_special_linear(2, rng)?,
            ]),
            FamilyId::PointedPairs(n) => sample_pointed_pair(n, rng)?,
            FamilyId::Sl2ModT => {
                for _ in 0..SAMPLE_RETRIES {
                    let z = [standard_complex_gaussian(rng), standard_complex_gaussian(rng)];
                    let w = [standard_complex_gaussian(rng), standard_complex_gaussian(rng)];
                    if (z[0] * w[1] - z[1] * w[0]).norm() > DISTINCT_LINES {
                        return Ok(SpacePoint::Sl2ModT { z, w });
                    }
                }
                return Err(SpaceError::SamplingExhausted(SAMPLE_RETRIES));
            }
        })
    }

    /// Haar-random element of the maximal compact subgroup `K`.
    pub fn sample_compact<R: Rng + ?Sized>(self, rng: &mut R) -> CompactElement {
        let su = |n, rng: &mut R| ComplexMatrix::random_special_unitary(n, rng);
        match self {
            FamilyId::Group(n) => CompactElement::Pair(su(n, rng), su(n, rng)),
            FamilyId::BasicAffine(n) | FamilyId::PointedPairs(n) => {
                CompactElement::Single(su(n, rng))
            }
            FamilyId::Triangles => CompactElement::Triple([su(2, rng), su(2, rng), su(2, rng)]),
            FamilyId::Sl2ModT => CompactElement::Single(su(2, rng)),
        }
    }

    /// Left action of `K` on points.
    pub fn act_compact(self, k: &CompactElement, p: &SpacePoint) -> Result<SpacePoint, SpaceError> {
        self.validate(p)?;
        Ok(match (k, p) {
            (CompactElement::Pair(u, v), SpacePoint::Group(a)) => {
                SpacePoint::Group(u.matmul(a).matmul(&v.adjoint()))
            }
            (CompactElement::Single(u), SpacePoint::BasicAffine(a)) => {
                SpacePoint::BasicAffine(u.matmul(a))
            }
            // (A, x, y) ↦ (Ax, ᵗA⁻¹y), and ᵗU⁻¹ = Ū for unitary U.
            (CompactElement::Single(u), SpacePoint::PointedPairs { x, y }) => {
                SpacePoint::PointedPairs {
                    x: u.mat_vec(x),
                    y: u.conj().mat_vec(y),
                }
            }
            (CompactElement::Triple(us), SpacePoint::Triangles(ms)) => SpacePoint::Triangles([
                us[0].matmul(&ms[0]),
                us[1].matmul(&ms[1]),
                us[2].matmul(&ms[2]),
            ]),
            (CompactElement::Single(u), SpacePoint::Sl2ModT { z, w }) => {
                let (z, w) = (u.mat_vec(z), u.mat_vec(w));
                SpacePoint::Sl2ModT {
                    z: [z[0], z[1]],
                    w: [w[0], w[1]],
                }
            }
            _ => return Err(SpaceError::CompactMismatch),
        })
    }

    /// Valuation cone in generator coordinates `v ↦ (⟨v, λ_1⟩, …, ⟨v, λ_s⟩)`.
    ///
    /// For `Sl2ModT` the cone is stored as `{q <= 0}`, the side on which the
    /// spherical logarithm converges; the `−log ρ` parametrisation lands on
    /// the opposite half-line.
    pub fn valuation_cone(self) -> PolyCone {
        static CACHE: OnceLock<Mutex<HashMap<FamilyId, PolyCone>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(c) = cache.lock().expect("cone cache poisoned").get(&self) {
            return c.clone();
        }
        let cone = self.build_valuation_cone();
        cache
            .lock()
            .expect("cone cache poisoned")
            .insert(self, cone.clone());
        cone
    }

    fn build_valuation_cone(self) -> PolyCone {
        let built = match self {
            FamilyId::Group(n) => {
                let r = n - 1;
                // ⟨ω̌_k, ω_i⟩ = min(k, i)(n − max(k, i)) / n, scaled by n.
                let rays = (1..=r)
                    .map(|k| {
                        (1..=r)
                            .map(|i| -((k.min(i) * (n - k.max(i))) as f64))
                            .collect()
                    })
                    .collect();
                let normals = (0..r)
                    .map(|row| {
                        (0..r)
                            .map(|col| match row.abs_diff(col) {
                                0 => 2.0,
                                1 => -1.0,
                                _ => 0.0,
                            })
                            .collect()
                    })
                    .collect();
                PolyCone::new(r, rays, normals)
            }
            FamilyId::BasicAffine(n) => Ok(PolyCone::whole_space(n - 1)),
            FamilyId::PointedPairs(_) => PolyCone::new(
                2,
                vec![vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]],
                vec![vec![1.0, 1.0]],
            ),
            FamilyId::Triangles => PolyCone::new(
                3,
                vec![
                    vec![-1.0, -1.0, 0.0],
                    vec![-1.0, 0.0, -1.0],
                    vec![0.0, -1.0, -1.0],
                ],
                vec![
                    vec![1.0, 1.0, -1.0],
                    vec![1.0, -1.0, 1.0],
                    vec![-1.0, 1.0, 1.0],
                ],
            ),
            FamilyId::Sl2ModT => PolyCone::new(1, vec![vec![-1.0]], vec![vec![1.0]]),
        };
        built.expect("shipped cones are consistent")
    }

    /// Shipped instances of the product inequality `φ_λ φ_μ >= c φ_γ`.
    pub fn tail_triples(self) -> Vec<TailTriple> {
        match self {
            FamilyId::PointedPairs(n) => vec![TailTriple {
                lambda: vec![1, 0],
                mu: vec![0, 1],
                gamma: vec![1, 1],
                c: (n as f64 - 1.0) / n as f64,
            }],
            _ => Vec::new(),
        }
    }

    pub fn descriptor(self) -> SphericalFamily {
        SphericalFamily {
            id: self,
            generators: self.generator_labels(),
            cone: self.valuation_cone(),
            tail_triples: self.tail_triples(),
        }
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyId::Group(n) => write!(f, "group{n}"),
            FamilyId::BasicAffine(n) => write!(f, "affineU{n}"),
            FamilyId::PointedPairs(n) => write!(f, "pointed{n}"),
            FamilyId::Triangles => f.write_str("triangles"),
            FamilyId::Sl2ModT => f.write_str("sl2t"),
        }
    }
}

impl FromStr for FamilyId {
    type Err = SpaceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || SpaceError::UnknownFamily(s.to_string());
        match s {
            "triangles" => return Ok(FamilyId::Triangles),
            "sl2t" => return Ok(FamilyId::Sl2ModT),
            _ => {}
        }
        let (ctor, rest): (fn(usize) -> FamilyId, &str) =
            if let Some(rest) = s.strip_prefix("group") {
                (FamilyId::Group, rest)
            } else if let Some(rest) = s.strip_prefix("affineU") {
                (FamilyId::BasicAffine, rest)
            } else if let Some(rest) = s.strip_prefix("pointed") {
                (FamilyId::PointedPairs, rest)
            } else {
                return Err(unknown());
            };
        let n: usize = rest.parse().map_err(|_| unknown())?;
        if (2..=MAX_DIM).contains(&n) {
            Ok(ctor(n))
        } else {
            Err(unknown())
        }
    }
}

impl From<FamilyId> for String {
    fn from(id: FamilyId) -> String {
        id.to_string()
    }
}

impl TryFrom<String> for FamilyId {
    type Error = SpaceError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Family descriptor bundling the generator labels, valuation cone and tail
/// inequality instances.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalFamily {
    pub id: FamilyId,
    pub generators: Vec<String>,
    pub cone: PolyCone,
    pub tail_triples: Vec<TailTriple>,
}

/// Instance of `φ_λ φ_μ >= c · φ_γ`, weights in generator coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TailTriple {
    pub lambda: Vec<u32>,
    pub mu: Vec<u32>,
    pub gamma: Vec<u32>,
    pub c: f64,
}

impl TailTriple {
    /// `φ_λ φ_μ − c φ_γ` at `p`.
    pub fn margin(&self, family: FamilyId, p: &SpacePoint) -> Result<f64, SpaceError> {
        Ok(family.phi_weight(&self.lambda, p)? * family.phi_weight(&self.mu, p)?
            - self.c * family.phi_weight(&self.gamma, p)?)
    }
}

/// Point of one of the families.
#[derive(Debug, Clone, PartialEq)]
pub enum SpacePoint {
    Group(ComplexMatrix),
    BasicAffine(ComplexMatrix),
    PointedPairs {
        x: Vec<Complex64>,
        y: Vec<Complex64>,
    },
    Triangles([ComplexMatrix; 3]),
    Sl2ModT {
        z: [Complex64; 2],
        w: [Complex64; 2],
    },
}

impl SpacePoint {
    fn kind(&self) -> &'static str {
        match self {
            SpacePoint::Group(_) => "group",
            SpacePoint::BasicAffine(_) => "basic affine",
            SpacePoint::PointedPairs { .. } => "pointed pairs",
            SpacePoint::Triangles(_) => "triangles",
            SpacePoint::Sl2ModT { .. } => "sl2t",
        }
    }
}

/// Element of the maximal compact subgroup `K` of the family's group.
#[derive(Debug, Clone, PartialEq)]
pub enum CompactElement {
    /// `(U, V) ∈ SU_n²` acting by `A ↦ U A V*`.
    Pair(ComplexMatrix, ComplexMatrix),
    Single(ComplexMatrix),
    Triple([ComplexMatrix; 3]),
}

const TRIANGLE_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

fn sq_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn group_phi(a: &ComplexMatrix, n: usize, k: usize) -> f64 {
    let sets = subsets(n, k);
    let mut total = 0.0;
    for rows in &sets {
        for cols in &sets {
            total += a.minor(rows, cols).expect("valid index sets").norm_sqr();
        }
    }
    total / binomial(n, k) as f64
}

fn affine_phi(a: &ComplexMatrix, n: usize, k: usize) -> f64 {
    subsets(n, k)
        .iter()
        .map(|rows| a.flag_minor(rows).expect("valid index sets").norm_sqr())
        .sum()
}

/// `½ Σ_{r,s} |det(row_r(M), row_s(N))|²`.
fn triangle_phi(m: &ComplexMatrix, n: &ComplexMatrix) -> f64 {
    let mut total = 0.0;
    for r in 0..2 {
        for s in 0..2 {
            let (a, b) = (m.row(r), n.row(s));
            total += (a[0] * b[1] - a[1] * b[0]).norm_sqr();
        }
    }
    0.5 * total
}

fn sl2t_phi(z: &[Complex64; 2], w: &[Complex64; 2]) -> f64 {
    let num = (z[0] * w[0]).norm_sqr()
        + 0.5 * (z[0] * w[1] + w[0] * z[1]).norm_sqr()
        + (z[1] * w[1]).norm_sqr();
    num / (z[0] * w[1] - z[1] * w[0]).norm_sqr()
}

fn sample_pointed_pair<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<SpacePoint, SpaceError> {
    for _ in 0..SAMPLE_RETRIES {
        let x: Vec<Complex64> = (0..n).map(|_| standard_complex_gaussian(rng)).collect();
        let nx = sq_norm(&x);
        if nx.sqrt() < MIN_SAMPLE_NORM {
            continue;
        }
        let y0: Vec<Complex64> = (0..n).map(|_| standard_complex_gaussian(rng)).collect();
        let pairing: Complex64 = x.iter().zip(&y0).map(|(a, b)| a * b).sum();
        let shift = (Complex64::new(1.0, 0.0) - pairing) / nx;
        let y = y0
            .iter()
            .zip(&x)
            .map(|(b, a)| b + shift * a.conj())
            .collect();
        return Ok(SpacePoint::PointedPairs { x, y });
    }
    Err(SpaceError::SamplingExhausted(SAMPLE_RETRIES))
}

fn pointed_pair<'a>(p: &'a SpacePoint) -> Result<(&'a [Complex64], &'a [Complex64]), SpaceError> {
    match p {
        SpacePoint::PointedPairs { x, y } => {
            FamilyId::PointedPairs(x.len()).validate(p)?;
            Ok((x, y))
        }
        other => Err(SpaceError::WrongFamily {
            expected: FamilyId::PointedPairs(0),
            got: other.kind().into(),
        }),
    }
}

fn sl2t_pair(p: &SpacePoint) -> Result<(&[Complex64; 2], &[Complex64; 2]), SpaceError> {
    match p {
        SpacePoint::Sl2ModT { z, w } => Ok((z, w)),
        other => Err(SpaceError::WrongFamily {
            expected: FamilyId::Sl2ModT,
            got: other.kind().into(),
        }),
    }
}

/// Spherical function of the adjoint weight on `SL_n / SL_{n-1}`:
/// `(‖x‖²‖y‖² − 1/n) · n/(n−1)`, scaled so the base point gives one.
pub fn phi_extended_pointed_pairs(p: &SpacePoint) -> Result<f64, SpaceError> {
    let (x, y) = pointed_pair(p)?;
    let n = x.len() as f64;
    Ok((sq_norm(x) * sq_norm(y) - 1.0 / n) * n / (n - 1.0))
}

/// Spherical function of weight `k` on `SL_2 / U`, summed over the monomial
/// basis of degree-`k` forms in the first column `(x, y)`:
/// `Σ_{a+b=k} C(k, a) |x^a y^b|²`.
pub fn phi_affine2_weight(p: &SpacePoint, k: u32) -> Result<f64, SpaceError> {
    FamilyId::BasicAffine(2).validate(p)?;
    let SpacePoint::BasicAffine(a) = p else {
        unreachable!("validated above")
    };
    let (x, y) = (a[(0, 0)].norm_sqr(), a[(1, 0)].norm_sqr());
    Ok((0..=k)
        .map(|i| binomial(k as usize, i as usize) as f64 * x.powi(i as i32) * y.powi((k - i) as i32))
        .sum())
}

/// `ρ = 1 − |⟨z, w⟩|² / (‖z‖² ‖w‖²)`, the squared sine of the angle between
/// the two lines.
pub fn rho_sl2t(p: &SpacePoint) -> Result<f64, SpaceError> {
    FamilyId::Sl2ModT.validate(p)?;
    let (z, w) = sl2t_pair(p)?;
    let inner: Complex64 = z.iter().zip(w).map(|(a, b)| a.conj() * b).sum();
    Ok(1.0 - inner.norm_sqr() / (sq_norm(z) * sq_norm(w)))
}

/// Closed-form Kirwan map of `P¹ × P¹`; also defined on the diagonal.
pub fn kirwan_sl2t(p: &SpacePoint) -> Result<f64, SpaceError> {
    let (z, w) = sl2t_pair(p)?;
    let (nz, nw) = (sq_norm(z), sq_norm(w));
    if !(nz > 0.0 && nw > 0.0) {
        return Err(SpaceError::Invariant("zero vector in C²".into()));
    }
    let first = z[0].norm_sqr() / nz + w[0].norm_sqr() / nw - 1.0;
    let second = z[0].norm_sqr() * z[1].norm_sqr() / (nz * nz)
        + 2.0 * (z[0] * w[0].conj() * z[1].conj() * w[1]).re / (nz * nw)
        + w[0].norm_sqr() * w[1].norm_sqr() / (nw * nw);
    Ok(0.5 * (first * first + second).max(0.0).sqrt())
}

/// Exchanges the two lines.
pub fn involution_sl2t(p: &SpacePoint) -> Result<SpacePoint, SpaceError> {
    let (z, w) = sl2t_pair(p)?;
    Ok(SpacePoint::Sl2ModT { z: *w, w: *z })
}

/// Checks that a pointed-pairs vector pair satisfies `Σ x_i y_i = 1`.
pub fn pairing_residual(x: &[Complex64], y: &[Complex64]) -> f64 {
    (x.iter().zip(y).map(|(a, b)| a * b).sum::<Complex64>() - 1.0).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn family_ids_round_trip() {
        for id in FamilyId::SHIPPED {
            assert_eq!(id.to_string().parse::<FamilyId>().unwrap(), id);
        }
        assert!("group1".parse::<FamilyId>().is_err());
        assert!("torus".parse::<FamilyId>().is_err());
        let json = serde_json::to_string(&FamilyId::PointedPairs(3)).unwrap();
        assert_eq!(json, "\"pointed3\"");
    }

    #[test]
    fn normalisation_at_base_point() {
        for id in FamilyId::SHIPPED {
            for v in id.phi_all(&id.base_point()).unwrap() {
                assert!((v - 1.0).abs() < 1e-12, "{id}: {v}");
            }
        }
    }

    #[test]
    fn group3_boundary_values() {
        // Singular values (√2, √2, 1/2): squared (2, 2, 1/4).
        let a = ComplexMatrix::from_diagonal(&[c(2f64.sqrt()), c(2f64.sqrt()), c(0.5)]);
        let id = FamilyId::Group(3);
        let p = SpacePoint::Group(a);
        assert!((id.phi(0, &p).unwrap() - 17.0 / 12.0).abs() < 1e-14);
        assert!((id.phi(1, &p).unwrap() - 10.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn sl2t_values() {
        let p = SpacePoint::Sl2ModT {
            z: [c(1.0), c(1.0)],
            w: [c(-1.0), c(1.0)],
        };
        assert!((FamilyId::Sl2ModT.phi(0, &p).unwrap() - 0.5).abs() < 1e-15);
        assert!((rho_sl2t(&p).unwrap() - 1.0).abs() < 1e-15);
        let q = SpacePoint::Sl2ModT {
            z: [c(1.0), c(0.0)],
            w: [c(1.0), c(1.0)],
        };
        assert!((rho_sl2t(&q).unwrap() - 0.5).abs() < 1e-15);
        let diag = SpacePoint::Sl2ModT {
            z: [c(1.0), c(0.0)],
            w: [c(1.0), c(0.0)],
        };
        assert!((kirwan_sl2t(&diag).unwrap() - 0.5).abs() < 1e-15);
        assert!(rho_sl2t(&diag).is_err());
        let orth = SpacePoint::Sl2ModT {
            z: [c(1.0), c(0.0)],
            w: [c(0.0), c(1.0)],
        };
        assert_eq!(kirwan_sl2t(&orth).unwrap(), 0.0);
    }

    #[test]
    fn sl2t_closed_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let id = FamilyId::Sl2ModT;
        for _ in 0..500 {
            let p = id.sample_point(&mut rng).unwrap();
            let rho = rho_sl2t(&p).unwrap();
            let phi = id.phi(0, &p).unwrap();
            assert!((phi - (1.0 / rho - 0.5)).abs() < 1e-9 * phi);
            let k = kirwan_sl2t(&p).unwrap();
            assert!((rho - (1.0 - 4.0 * k * k)).abs() < 1e-12);
            let SpacePoint::Sl2ModT { z, w } = &p else { unreachable!() };
            let scaled = SpacePoint::Sl2ModT {
                z: [z[0] * Complex64::new(0.3, 2.0), z[1] * Complex64::new(0.3, 2.0)],
                w: [w[0] * c(-7.0), w[1] * c(-7.0)],
            };
            assert!((id.phi(0, &scaled).unwrap() - phi).abs() < 1e-10 * phi);
        }
    }

    #[test]
    fn group_phi_matches_elementary_symmetric_functions() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [3, 4] {
            let id = FamilyId::Group(n);
            for _ in 0..50 {
                let p = id.sample_point(&mut rng).unwrap();
                let SpacePoint::Group(a) = &p else { unreachable!() };
                let d: Vec<f64> = a.singular_values().unwrap().iter().map(|s| s * s).collect();
                for k in 1..n {
                    let e: f64 = subsets(n, k)
                        .iter()
                        .map(|s| s.iter().map(|&i| d[i]).product::<f64>())
                        .sum();
                    let expect = e / binomial(n, k) as f64;
                    let got = id.phi(k - 1, &p).unwrap();
                    assert!((got - expect).abs() < 1e-9 * expect);
                }
            }
        }
    }

    #[test]
    fn pointed_samples_and_extension() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let id = FamilyId::PointedPairs(3);
        assert!((phi_extended_pointed_pairs(&id.base_point()).unwrap() - 1.0).abs() < 1e-15);
        for _ in 0..200 {
            let p = id.sample_point(&mut rng).unwrap();
            let SpacePoint::PointedPairs { x, y } = &p else { unreachable!() };
            assert!(pairing_residual(x, y) < 1e-10);
            // Σ_ij |x_i y_j − δ_ij / n|² = ‖x‖²‖y‖² − 1/n.
            let mut direct = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    let delta = if i == j { 1.0 / 3.0 } else { 0.0 };
                    direct += (x[i] * y[j] - delta).norm_sqr();
                }
            }
            let ext = phi_extended_pointed_pairs(&p).unwrap();
            assert!((ext - direct * 1.5).abs() < 1e-9 * ext);
        }
    }

    #[test]
    fn affine2_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let id = FamilyId::BasicAffine(2);
        for _ in 0..100 {
            let p = id.sample_point(&mut rng).unwrap();
            let base = id.phi(0, &p).unwrap();
            for k in 0..6 {
                let v = phi_affine2_weight(&p, k).unwrap();
                assert!((v - base.powi(k as i32)).abs() < 1e-9 * v);
            }
        }
    }

    #[test]
    fn compact_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for id in FamilyId::SHIPPED {
            for _ in 0..50 {
                let p = id.sample_point(&mut rng).unwrap();
                let k = id.sample_compact(&mut rng);
                let kp = id.act_compact(&k, &p).unwrap();
                for (a, b) in id.phi_all(&p).unwrap().iter().zip(id.phi_all(&kp).unwrap()) {
                    assert!((a - b).abs() < 1e-9 * a, "{id}");
                }
            }
        }
    }

    #[test]
    fn validation_errors() {
        let bad = SpacePoint::PointedPairs {
            x: vec![c(1.0), c(0.0), c(0.0)],
            y: vec![c(2.0), c(0.0), c(0.0)],
        };
        assert!(matches!(
            FamilyId::PointedPairs(3).phi(0, &bad),
            Err(SpaceError::Invariant(_))
        ));
        let g = FamilyId::Group(3).base_point();
        assert!(matches!(
            FamilyId::Triangles.phi(0, &g),
            Err(SpaceError::WrongFamily { .. })
        ));
        assert!(matches!(
            FamilyId::Group(3).phi(2, &g),
            Err(SpaceError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn cones() {
        let pointed = FamilyId::PointedPairs(3).valuation_cone();
        assert!(pointed.contains(&[-1.0, 0.0], 0.0));
        assert!(!pointed.contains(&[1.0, 1.0], 0.0));
        let group = FamilyId::Group(3).valuation_cone();
        assert_eq!(group.rays(), &[vec![-2.0, -1.0], vec![-1.0, -2.0]]);
        for q in [[-2.0, -1.0], [-1.0, -2.0], [-1.0, -1.0]] {
            assert!(group.contains(&q, 0.0));
        }
        assert!(!group.contains(&[0.0, -1.0], 1e-9));
        assert!(!FamilyId::Triangles.valuation_cone().contains(&[0.0, 0.0, -1.0], 1e-9));
        assert!(FamilyId::Sl2ModT.valuation_cone().contains(&[-3.0], 0.0));
        let g4 = FamilyId::Group(4).valuation_cone();
        assert_eq!(g4.rays()[0], vec![-3.0, -2.0, -1.0]);
    }

    #[test]
    fn group3_cone_matches_diagonal_limits() {
        // Diagonal exponents (a1, a2, a3) summing to zero have limit point
        // (2 min a_i, 2 min pairwise sums); every such point lies in the cone.
        let cone = FamilyId::Group(3).valuation_cone();
        for i in -6..=6 {
            for j in -6..=6 {
                let a = [i as f64 * 0.5, j as f64 * 0.5, -(i + j) as f64 * 0.5];
                let m1 = a.iter().cloned().fold(f64::INFINITY, f64::min);
                let m2 = (a[0] + a[1]).min(a[0] + a[2]).min(a[1] + a[2]);
                assert!(cone.contains(&[2.0 * m1, 2.0 * m2], 1e-12));
            }
        }
    }
}
