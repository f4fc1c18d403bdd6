//! Spherical tropicalization of formal curves through the generic-translate
//! valuation `v̄(f) = min_g ord_t (g·f)(γ(t))`, and the numerical check of
//! `log_t φ_λ(γ(t)) → 2 v_γ(f_λ)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_rational::Rational64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrixkit::ComplexMatrix;
use crate::series::{PuiseuxSeries, SeriesError};
use crate::spaces::{FamilyId, SpaceError, SpacePoint};

/// Independent random translates per round.
pub const DEFAULT_TRIALS: usize = 8;
/// Rounds of fresh translates before giving up on agreement.
pub const MAX_ROUNDS: usize = 4;
/// Defining equations must hold with residual coefficients below this.
pub const CURVE_RESIDUAL: f64 = 1e-9;
/// Translate entries are Gaussians rounded to this denominator.
pub const TRANSLATE_DENOMINATOR: f64 = 65536.0;

#[derive(Debug, Error)]
pub enum TropicalError {
    #[error("family {0} has no curve model")]
    Unsupported(String),
    #[error("unknown curve family {0:?}")]
    UnknownFamily(String),
    #[error("curve for {family} needs {expected} coordinates, got {got}")]
    CoordinateCount {
        family: CurveFamily,
        expected: usize,
        got: usize,
    },
    #[error("defining equation fails: {0}")]
    InvalidCurve(String),
    #[error("polynomial uses {got} variables, curve has {expected}")]
    VariableCount { expected: usize, got: usize },
    #[error("generator index {index} out of range for rank {rank}")]
    IndexOutOfRange { index: usize, rank: usize },
    #[error("valuation inconclusive after {trials} trials: {reason}; raise the truncation and retry")]
    Inconclusive { trials: usize, reason: String },
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("evaluation at t = {t} failed: {reason}")]
    Evaluation { t: f64, reason: String },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("invalid curve JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Families that carry curves: the spherical families with a polynomial
/// coordinate model, plus `C² ∖ 0` under `SL_2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum CurveFamily {
    Space(FamilyId),
    Sl2Plane,
}

impl fmt::Display for CurveFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveFamily::Space(id) => id.fmt(f),
            CurveFamily::Sl2Plane => f.write_str("sl2plane"),
        }
    }
}

impl FromStr for CurveFamily {
    type Err = TropicalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "sl2plane" {
            return Ok(CurveFamily::Sl2Plane);
        }
        let id: FamilyId = s
            .parse()
            .map_err(|_| TropicalError::UnknownFamily(s.to_string()))?;
        CurveFamily::try_from(id)
    }
}

impl TryFrom<FamilyId> for CurveFamily {
    type Error = TropicalError;
    fn try_from(id: FamilyId) -> Result<Self, Self::Error> {
        match id {
            FamilyId::Sl2ModT => Err(TropicalError::Unsupported(id.to_string())),
            _ => Ok(CurveFamily::Space(id)),
        }
    }
}

impl From<CurveFamily> for String {
    fn from(f: CurveFamily) -> String {
        f.to_string()
    }
}

impl TryFrom<String> for CurveFamily {
    type Error = TropicalError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl CurveFamily {
    /// Number of ambient coordinates.
    pub fn num_coords(self) -> usize {
        match self {
            CurveFamily::Space(FamilyId::Group(n) | FamilyId::BasicAffine(n)) => n * n,
            CurveFamily::Space(FamilyId::PointedPairs(n)) => 2 * n,
            CurveFamily::Space(FamilyId::Triangles) => 12,
            CurveFamily::Space(FamilyId::Sl2ModT) => unreachable!("rejected at construction"),
            CurveFamily::Sl2Plane => 2,
        }
    }

    pub fn rank(self) -> usize {
        match self {
            CurveFamily::Space(id) => id.rank(),
            CurveFamily::Sl2Plane => 1,
        }
    }

    /// Highest-weight function `f_{λ_i}` as a polynomial in the coordinates:
    /// principal minors (group, basic affine), `x_n` and `y_1` (pointed
    /// pairs), `det A_ij` from the top rows (triangles), `y` (plane).
    pub fn highest_weight_function(self, i: usize) -> Result<Polynomial, TropicalError> {
        if i >= self.rank() {
            return Err(TropicalError::IndexOutOfRange {
                index: i,
                rank: self.rank(),
            });
        }
        let nv = self.num_coords();
        Ok(match self {
            CurveFamily::Space(FamilyId::Group(n) | FamilyId::BasicAffine(n)) => {
                let idx: Vec<usize> = (0..=i).collect();
                Polynomial::minor(nv, &idx, &idx, |r, c| r * n + c)
            }
            CurveFamily::Space(FamilyId::PointedPairs(n)) => {
                Polynomial::variable(nv, if i == 0 { n - 1 } else { n })
            }
            CurveFamily::Space(FamilyId::Triangles) => {
                let (a, b) = [(0, 1), (0, 2), (1, 2)][i];
                let var = |m: usize, c: usize| 4 * m + c;
                Polynomial::variable(nv, var(a, 0))
                    .mul(&Polynomial::variable(nv, var(b, 1)))
                    .sub(&Polynomial::variable(nv, var(b, 0)).mul(&Polynomial::variable(nv, var(a, 1))))
            }
            CurveFamily::Sl2Plane => Polynomial::variable(nv, 1),
            CurveFamily::Space(FamilyId::Sl2ModT) => unreachable!("rejected at construction"),
        })
    }

    /// Defining equations `e(x) = 0` of the ambient variety.
    fn defining_equations(self) -> Vec<(String, Polynomial)> {
        let nv = self.num_coords();
        let one = Polynomial::constant(nv, Complex64::new(1.0, 0.0));
        match self {
            CurveFamily::Space(FamilyId::Group(n) | FamilyId::BasicAffine(n)) => {
                let idx: Vec<usize> = (0..n).collect();
                vec![(
                    "det = 1".into(),
                    Polynomial::minor(nv, &idx, &idx, |r, c| r * n + c).sub(&one),
                )]
            }
            CurveFamily::Space(FamilyId::PointedPairs(n)) => {
                let mut pairing = Polynomial::zero(nv);
                for k in 0..n {
                    pairing = pairing
                        .add(&Polynomial::variable(nv, k).mul(&Polynomial::variable(nv, n + k)));
                }
                vec![("sum x_i y_i = 1".into(), pairing.sub(&one))]
            }
            CurveFamily::Space(FamilyId::Triangles) => (0..3)
                .map(|m| {
                    let det =
                        Polynomial::minor(nv, &[0, 1], &[0, 1], |r, c| 4 * m + 2 * r + c);
                    (format!("det M{} = 1", m + 1), det.sub(&one))
                })
                .collect(),
            _ => Vec::new(),
        }
    }
}

/// Sparse polynomial: exponent vector to complex coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Complex64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Complex64) -> Self {
        Self::monomial(nvars, vec![0; nvars], c)
    }

    pub fn variable(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(nvars, e, Complex64::new(1.0, 0.0))
    }

    pub fn monomial(nvars: usize, exponents: Vec<u32>, c: Complex64) -> Self {
        assert_eq!(exponents.len(), nvars, "exponent vector has the wrong length");
        let mut p = Self::zero(nvars);
        if c != Complex64::new(0.0, 0.0) {
            p.terms.insert(exponents, c);
        }
        p
    }

    /// Determinant of the submatrix on `rows × cols`, where `var(r, c)` names
    /// the coordinate holding entry `(r, c)`.
    pub fn minor(
        nvars: usize,
        rows: &[usize],
        cols: &[usize],
        var: impl Fn(usize, usize) -> usize,
    ) -> Self {
        assert_eq!(rows.len(), cols.len());
        let k = rows.len();
        let mut out = Self::zero(nvars);
        for perm in permutations(k) {
            let sign = if inversions(&perm) % 2 == 0 { 1.0 } else { -1.0 };
            let mut e = vec![0; nvars];
            for (a, &b) in perm.iter().enumerate() {
                e[var(rows[a], cols[b])] += 1;
            }
            out = out.add(&Self::monomial(nvars, e, Complex64::new(sign, 0.0)));
        }
        out
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Complex64)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            *terms.entry(e.clone()).or_default() += c;
        }
        terms.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        Polynomial {
            nvars: self.nvars,
            terms,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, v)| (e.clone(), v * c))
                .filter(|(_, v)| *v != Complex64::new(0.0, 0.0))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Self::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *out.terms.entry(e).or_default() += ca * cb;
            }
        }
        out.terms.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        out
    }

    /// Substitutes series for the coordinates.
    pub fn compose(&self, coords: &[PuiseuxSeries]) -> Result<PuiseuxSeries, TropicalError> {
        if coords.len() != self.nvars {
            return Err(TropicalError::VariableCount {
                expected: coords.len(),
                got: self.nvars,
            });
        }
        let mut powers: Vec<Vec<PuiseuxSeries>> = coords
            .iter()
            .map(|s| vec![PuiseuxSeries::one(), s.clone()])
            .collect();
        let mut total = PuiseuxSeries::zero();
        for (e, c) in &self.terms {
            let mut term = PuiseuxSeries::constant(*c);
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                while powers[i].len() <= k as usize {
                    let next = powers[i].last().unwrap().mul_series(&coords[i]);
                    powers[i].push(next);
                }
                term = term.mul_series(&powers[i][k as usize]);
            }
            total = total.add_series(&term);
        }
        Ok(total)
    }

    /// Numerical value at complex coordinates.
    pub fn evaluate(&self, x: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(x)
                    .fold(*c, |acc, (&k, v)| acc * v.powu(k))
            })
            .sum()
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

fn inversions(p: &[usize]) -> usize {
    let mut n = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                n += 1;
            }
        }
    }
    n
}

/// A formal curve on one of the ambient varieties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveJson", into = "CurveJson")]
pub struct Curve {
    family: CurveFamily,
    coords: Vec<PuiseuxSeries>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CurveJson {
    family: CurveFamily,
    coords: Vec<PuiseuxSeries>,
}

impl TryFrom<CurveJson> for Curve {
    type Error = TropicalError;
    fn try_from(c: CurveJson) -> Result<Self, Self::Error> {
        Curve::new(c.family, c.coords)
    }
}

impl From<Curve> for CurveJson {
    fn from(c: Curve) -> Self {
        CurveJson {
            family: c.family,
            coords: c.coords,
        }
    }
}

impl Curve {
    /// Validates the coordinate count and the defining equations as series
    /// identities.
    pub fn new(family: CurveFamily, coords: Vec<PuiseuxSeries>) -> Result<Self, TropicalError> {
        if let CurveFamily::Space(FamilyId::Sl2ModT) = family {
            return Err(TropicalError::Unsupported(family.to_string()));
        }
        if coords.len() != family.num_coords() {
            return Err(TropicalError::CoordinateCount {
                family,
                expected: family.num_coords(),
                got: coords.len(),
            });
        }
        for (name, eq) in family.defining_equations() {
            let residual = eq.compose(&coords)?;
            let bad = residual
                .terms()
                .find(|(_, c)| c.norm() >= CURVE_RESIDUAL);
            if let Some((k, c)) = bad {
                return Err(TropicalError::InvalidCurve(format!(
                    "{name}: residual coefficient {c} at t^({k}/{})",
                    residual.ramification()
                )));
            }
        }
        if family == CurveFamily::Sl2Plane
            && coords.iter().all(|s| s.is_exact() && s.is_empty())
        {
            return Err(TropicalError::InvalidCurve(
                "both coordinates are identically zero".into(),
            ));
        }
        Ok(Curve { family, coords })
    }

    pub fn from_json(text: &str) -> Result<Self, TropicalError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("curves serialize")
    }

    pub fn family(&self) -> CurveFamily {
        self.family
    }

    pub fn coords(&self) -> &[PuiseuxSeries] {
        &self.coords
    }

    /// Diagonal curve `diag(t^{a_1}, …, t^{a_n})` on a matrix family.
    pub fn diagonal(family: FamilyId, exponents: &[i64]) -> Result<Self, TropicalError> {
        let n = exponents.len();
        let mut coords = vec![PuiseuxSeries::zero(); n * n];
        for (i, &a) in exponents.iter().enumerate() {
            coords[i * n + i] = PuiseuxSeries::monomial(Complex64::new(1.0, 0.0), a, 1);
        }
        Curve::new(CurveFamily::try_from(family)?, coords)
    }

    /// The constant curve at the family's base point.
    pub fn base(family: CurveFamily) -> Result<Self, TropicalError> {
        let coords = match family {
            CurveFamily::Sl2Plane => vec![PuiseuxSeries::zero(), PuiseuxSeries::one()],
            CurveFamily::Space(id) => point_coordinates(&id.base_point())
                .into_iter()
                .map(PuiseuxSeries::constant)
                .collect(),
        };
        Curve::new(family, coords)
    }

    /// Numerical point `γ(t)`, projected back onto the defining equations
    /// (determinants and pairing rescaled to one) to absorb truncation and
    /// rounding error.
    pub fn evaluate(&self, t: f64) -> Result<EvaluatedPoint, TropicalError> {
        let bad = |reason: String| TropicalError::Evaluation { t, reason };
        let v: Vec<Complex64> = self.coords.iter().map(|s| s.evaluate(t)).collect();
        if v.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(bad("coordinate overflow".into()));
        }
        let to_sl = |vals: &[Complex64], n: usize| -> Result<ComplexMatrix, TropicalError> {
            let rows: Vec<Vec<Complex64>> = vals.chunks(n).map(|r| r.to_vec()).collect();
            let m = ComplexMatrix::from_rows(&rows);
            let d = m.det();
            if !(d.norm() > 0.0) || !d.re.is_finite() {
                return Err(bad(format!("determinant {d}")));
            }
            Ok(m.scale((d.ln() / n as f64).exp().inv()))
        };
        Ok(match self.family {
            CurveFamily::Sl2Plane => EvaluatedPoint::Plane([v[0], v[1]]),
            CurveFamily::Space(id) => EvaluatedPoint::Space(match id {
                FamilyId::Group(n) => SpacePoint::Group(to_sl(&v, n)?),
                FamilyId::BasicAffine(n) => SpacePoint::BasicAffine(to_sl(&v, n)?),
                FamilyId::PointedPairs(n) => {
                    let (x, y) = v.split_at(n);
                    let pairing: Complex64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                    if !(pairing.norm() > 0.0) {
                        return Err(bad("pairing vanishes".into()));
                    }
                    SpacePoint::PointedPairs {
                        x: x.to_vec(),
                        y: y.iter().map(|b| b / pairing).collect(),
                    }
                }
                FamilyId::Triangles => SpacePoint::Triangles([
                    to_sl(&v[0..4], 2)?,
                    to_sl(&v[4..8], 2)?,
                    to_sl(&v[8..12], 2)?,
                ]),
                FamilyId::Sl2ModT => unreachable!("rejected at construction"),
            }),
        })
    }
}

/// Flattened coordinates of a space point in the curve coordinate order.
pub fn point_coordinates(p: &SpacePoint) -> Vec<Complex64> {
    match p {
        SpacePoint::Group(a) | SpacePoint::BasicAffine(a) => a.entries().to_vec(),
        SpacePoint::PointedPairs { x, y } => x.iter().chain(y).copied().collect(),
        SpacePoint::Triangles(ms) => ms.iter().flat_map(|m| m.entries().to_vec()).collect(),
        SpacePoint::Sl2ModT { z, w } => vec![z[0], z[1], w[0], w[1]],
    }
}

/// `γ(t)` for a numerical spherical-function evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum EvaluatedPoint {
    Space(SpacePoint),
    Plane([Complex64; 2]),
}

/// Spherical function of generator `i` at an evaluated point; on the plane
/// `φ = |x|² + |y|²`.
pub fn phi_at(family: CurveFamily, i: usize, p: &EvaluatedPoint) -> Result<f64, TropicalError> {
    match (family, p) {
        (CurveFamily::Space(id), EvaluatedPoint::Space(sp)) => Ok(id.phi(i, sp)?),
        (CurveFamily::Sl2Plane, EvaluatedPoint::Plane(v)) if i == 0 => {
            Ok(v[0].norm_sqr() + v[1].norm_sqr())
        }
        _ => Err(TropicalError::IndexOutOfRange {
            index: i,
            rank: family.rank(),
        }),
    }
}

/// `v̂_γ(f) = ord_t f(γ(t))`.
pub fn curve_order(f: &Polynomial, curve: &Curve) -> Result<Rational64, TropicalError> {
    Ok(f.compose(&curve.coords)?.order()?)
}

fn dyadic_gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let g: f64 = rng.sample(StandardNormal);
    (g * TRANSLATE_DENOMINATOR).round() / TRANSLATE_DENOMINATOR
}

/// Random invertible real matrix with dyadic entries.
fn random_translate<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    loop {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| dyadic_gaussian(rng)).collect())
            .collect();
        let m = ComplexMatrix::from_real_rows(&rows);
        if m.det().norm() > 1e-3 {
            return m;
        }
    }
}

/// `Σ_j m_ij s_j` for each row `i`.
fn linear_image(m: &ComplexMatrix, s: &[PuiseuxSeries]) -> Vec<PuiseuxSeries> {
    (0..m.dim())
        .map(|i| {
            s.iter()
                .enumerate()
                .fold(PuiseuxSeries::zero(), |acc, (j, sj)| {
                    acc.add_series(&sj.scale(m[(i, j)]))
                })
        })
        .collect()
}

/// Matrix product of series matrices given as row-major slices.
fn series_matmul(a: &ComplexMatrix, s: &[PuiseuxSeries], n: usize) -> Vec<PuiseuxSeries> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = PuiseuxSeries::zero();
            for k in 0..n {
                acc = acc.add_series(&s[k * n + j].scale(a[(i, k)]));
            }
            out.push(acc);
        }
    }
    out
}

fn series_matmul_right(s: &[PuiseuxSeries], b: &ComplexMatrix, n: usize) -> Vec<PuiseuxSeries> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = PuiseuxSeries::zero();
            for k in 0..n {
                acc = acc.add_series(&s[i * n + k].scale(b[(k, j)]));
            }
            out.push(acc);
        }
    }
    out
}

/// Coordinates of `g · γ` for a random group element `g`.
pub fn translate_curve<R: Rng + ?Sized>(curve: &Curve, rng: &mut R) -> Vec<PuiseuxSeries> {
    let c = &curve.coords;
    match curve.family {
        CurveFamily::Space(FamilyId::Group(n)) => {
            let left = random_translate(n, rng);
            let right = random_translate(n, rng);
            series_matmul_right(&series_matmul(&left, c, n), &right, n)
        }
        CurveFamily::Space(FamilyId::BasicAffine(n)) => {
            series_matmul(&random_translate(n, rng), c, n)
        }
        CurveFamily::Space(FamilyId::PointedPairs(n)) => {
            let g = random_translate(n, rng);
            let dual = g.inverse().expect("translate is invertible").transpose();
            let mut out = linear_image(&g, &c[..n]);
            out.extend(linear_image(&dual, &c[n..]));
            out
        }
        CurveFamily::Space(FamilyId::Triangles) => (0..3)
            .flat_map(|m| series_matmul(&random_translate(2, rng), &c[4 * m..4 * m + 4], 2))
            .collect(),
        CurveFamily::Sl2Plane => linear_image(&random_translate(2, rng), c),
        CurveFamily::Space(FamilyId::Sl2ModT) => unreachable!("rejected at construction"),
    }
}

/// Generic-translate valuation `v_γ(f) = min_g ord_t (g·f)(γ)`, estimated
/// from `trials` random translates per round. The minimum must be attained by
/// at least two trials; otherwise a fresh round is drawn.
pub fn generic_valuation<R: Rng + ?Sized>(
    f: &Polynomial,
    curve: &Curve,
    rng: &mut R,
    trials: usize,
) -> Result<Rational64, TropicalError> {
    let trials = trials.max(1);
    let mut last_reason = String::new();
    for _ in 0..MAX_ROUNDS {
        let mut orders = Vec::with_capacity(trials);
        for _ in 0..trials {
            let moved = translate_curve(curve, rng);
            match f.compose(&moved)?.order() {
                Ok(v) => orders.push(v),
                Err(SeriesError::Indeterminate { .. } | SeriesError::Zero) => {}
                Err(e) => return Err(e.into()),
            }
        }
        let Some(&min) = orders.iter().min() else {
            last_reason = "every trial vanished within the truncation window".into();
            continue;
        };
        if trials == 1 || orders.iter().filter(|&&v| v == min).count() >= 2 {
            return Ok(min);
        }
        last_reason = format!("minimum {min} attained by a single trial");
    }
    Err(TropicalError::Inconclusive {
        trials: trials * MAX_ROUNDS,
        reason: last_reason,
    })
}

/// `(v_γ(f_{λ_1}), …, v_γ(f_{λ_s}))`.
pub fn strop<R: Rng + ?Sized>(
    curve: &Curve,
    rng: &mut R,
    trials: usize,
) -> Result<Vec<Rational64>, TropicalError> {
    (0..curve.family.rank())
        .map(|i| {
            let f = curve.family.highest_weight_function(i)?;
            generic_valuation(&f, curve, rng, trials)
        })
        .collect()
}

/// Exact test `n · q <= 0` for every (integer) halfspace normal of the
/// family's valuation cone.
pub fn in_valuation_cone(family: CurveFamily, q: &[Rational64]) -> bool {
    match family {
        CurveFamily::Sl2Plane => true,
        CurveFamily::Space(id) => id.valuation_cone().halfspaces().iter().all(|h| {
            h.iter()
                .zip(q)
                .map(|(&a, &b)| Rational64::from_integer(a as i64) * b)
                .sum::<Rational64>()
                <= Rational64::from_integer(0)
        }),
    }
}

/// One row of a limit check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub t: f64,
    /// `log_t φ_i(γ(t))`.
    pub value: f64,
    /// `2 v_γ(f_i)`.
    pub target: f64,
    pub deviation: f64,
    /// `2 L(t²) − L(t)`, which cancels the leading `1/ln t` term.
    pub extrapolated: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitTable {
    pub family: CurveFamily,
    pub generator: usize,
    pub valuation: (i64, i64),
    pub rows: Vec<LimitRow>,
}

fn log_phi(curve: &Curve, i: usize, t: f64) -> Result<f64, TropicalError> {
    let p = curve.evaluate(t)?;
    let v = phi_at(curve.family, i, &p)?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(TropicalError::Evaluation {
            t,
            reason: format!("spherical function evaluated to {v}"),
        });
    }
    let l = v.ln() / t.ln();
    if !l.is_finite() {
        return Err(TropicalError::Evaluation {
            t,
            reason: "log overflow".into(),
        });
    }
    Ok(l)
}

/// Tabulates `log_t φ_i(γ(t))` against `2 v_γ(f_i)` along `t_list`.
pub fn limit_check<R: Rng + ?Sized>(
    curve: &Curve,
    i: usize,
    t_list: &[f64],
    rng: &mut R,
    trials: usize,
) -> Result<LimitTable, TropicalError> {
    let f = curve.family.highest_weight_function(i)?;
    let v = generic_valuation(&f, curve, rng, trials)?;
    let target = 2.0 * (*v.numer() as f64) / (*v.denom() as f64);
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        if !(t > 0.0 && t < 1.0) {
            return Err(TropicalError::Evaluation {
                t,
                reason: "t must lie in (0, 1)".into(),
            });
        }
        let value = log_phi(curve, i, t)?;
        let extrapolated = log_phi(curve, i, t * t).ok().map(|l2| 2.0 * l2 - value);
        rows.push(LimitRow {
            t,
            value,
            target,
            deviation: (value - target).abs(),
            extrapolated,
        });
    }
    Ok(LimitTable {
        family: curve.family,
        generator: i,
        valuation: (*v.numer(), *v.denom()),
        rows,
    })
}

/// A named test curve.
#[derive(Debug, Clone)]
pub struct NamedCurve {
    pub name: &'static str,
    pub curve: Curve,
}

fn mono(c: f64, k: i64) -> PuiseuxSeries {
    PuiseuxSeries::monomial(Complex64::new(c, 0.0), k, 1)
}

fn matrix_curve(family: FamilyId, entries: Vec<PuiseuxSeries>) -> Curve {
    Curve::new(CurveFamily::Space(family), entries).expect("battery curve is valid")
}

/// `x = (t^{a/2}, 0, …)`, `y = (t^{-a/2}, √(t^b − t^{-a}), 0, …)` as series,
/// for integers `a + b <= 0`.
pub fn pointed_preimage_curve(n: usize, a: i64, b: i64) -> Result<Curve, TropicalError> {
    if a + b > 0 {
        return Err(TropicalError::InvalidCurve(format!(
            "a + b = {} > 0 has no preimage",
            a + b
        )));
    }
    let half = |k: i64| PuiseuxSeries::monomial(Complex64::new(1.0, 0.0), k, 2);
    let radicand = half(2 * b).sub_series(&half(-2 * a));
    let mut coords = vec![PuiseuxSeries::zero(); 2 * n];
    coords[0] = half(a);
    coords[n] = half(-a);
    coords[n + 1] = if radicand.is_empty() {
        PuiseuxSeries::zero()
    } else {
        radicand.sqrt()?
    };
    Curve::new(CurveFamily::Space(FamilyId::PointedPairs(n)), coords)
}

/// The shipped curve battery: diagonal and unipotent group curves, torus
/// cosets of `SL_n / U`, exact pointed-pair preimages, a degenerating
/// triangle, plane curves and constant curves.
pub fn curve_battery() -> Vec<NamedCurve> {
    let z = PuiseuxSeries::zero;
    let one = || mono(1.0, 0);
    let diag = |id: FamilyId, e: &[i64]| Curve::diagonal(id, e).expect("valid diagonal");
    let plane = |x: PuiseuxSeries, y: PuiseuxSeries| {
        Curve::new(CurveFamily::Sl2Plane, vec![x, y]).expect("nonzero plane curve")
    };
    vec![
        NamedCurve {
            name: "group3 diag(t, 1, 1/t)",
            curve: diag(FamilyId::Group(3), &[1, 0, -1]),
        },
        NamedCurve {
            name: "group3 diag(1/t, 1/t, t^2)",
            curve: diag(FamilyId::Group(3), &[-1, -1, 2]),
        },
        NamedCurve {
            name: "group3 unipotent [[1/t, 1, 0], [0, t, 0], [0, 0, 1]]",
            curve: matrix_curve(
                FamilyId::Group(3),
                vec![mono(1.0, -1), one(), z(), z(), mono(1.0, 1), z(), z(), z(), one()],
            ),
        },
        NamedCurve {
            name: "group4 diag(t^2, t, 1/t, 1/t^2)",
            curve: diag(FamilyId::Group(4), &[2, 1, -1, -2]),
        },
        NamedCurve {
            name: "affineU2 diag(t, 1/t)",
            curve: diag(FamilyId::BasicAffine(2), &[1, -1]),
        },
        NamedCurve {
            name: "affineU3 [[t, 0, 0], [1, 1/t, 0], [0, 0, 1]]",
            curve: matrix_curve(
                FamilyId::BasicAffine(3),
                vec![mono(1.0, 1), z(), z(), one(), mono(1.0, -1), z(), z(), z(), one()],
            ),
        },
        NamedCurve {
            name: "pointed3 preimage (a, b) = (-2, 1)",
            curve: pointed_preimage_curve(3, -2, 1).expect("admissible"),
        },
        NamedCurve {
            name: "pointed4 preimage (a, b) = (-2, 0)",
            curve: pointed_preimage_curve(4, -2, 0).expect("admissible"),
        },
        NamedCurve {
            name: "triangles (I, diag(t, 1/t), I)",
            curve: Curve::new(
                CurveFamily::Space(FamilyId::Triangles),
                vec![
                    one(), z(), z(), one(),
                    mono(1.0, 1), z(), z(), mono(1.0, -1),
                    one(), z(), z(), one(),
                ],
            )
            .expect("valid triangle curve"),
        },
        NamedCurve {
            name: "sl2plane (t^2 + t^3, t^5)",
            curve: plane(PuiseuxSeries::laurent(2, &[1.0.into(), 1.0.into()]), mono(1.0, 5)),
        },
        NamedCurve {
            name: "sl2plane (1/t, 1)",
            curve: plane(mono(1.0, -1), one()),
        },
        NamedCurve {
            name: "group3 constant identity",
            curve: Curve::base(CurveFamily::Space(FamilyId::Group(3))).expect("base curve"),
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn plane_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = CurveFamily::Sl2Plane.highest_weight_function(0).unwrap();
        let c = Curve::new(
            CurveFamily::Sl2Plane,
            vec![PuiseuxSeries::laurent(2, &[1.0.into(), 1.0.into()]), mono(1.0, 5)],
        )
        .unwrap();
        assert_eq!(curve_order(&y, &c).unwrap(), r(5, 1));
        assert_eq!(generic_valuation(&y, &c, &mut rng, 8).unwrap(), r(2, 1));
        let c = Curve::new(CurveFamily::Sl2Plane, vec![mono(1.0, -1), mono(1.0, 0)]).unwrap();
        assert_eq!(generic_valuation(&y, &c, &mut rng, 8).unwrap(), r(-1, 1));
    }

    #[test]
    fn defining_equations_hold_on_curves() {
        let det = {
            let idx = [0, 1, 2];
            Polynomial::minor(9, &idx, &idx, |a, b| a * 3 + b)
        };
        let c = Curve::diagonal(FamilyId::Group(3), &[3, -1, -2]).unwrap();
        assert_eq!(curve_order(&det, &c).unwrap(), r(0, 1));
        let p = pointed_preimage_curve(3, -2, 1).unwrap();
        let mut pairing = Polynomial::zero(6);
        for k in 0..3 {
            pairing = pairing.add(&Polynomial::variable(6, k).mul(&Polynomial::variable(6, 3 + k)));
        }
        assert_eq!(curve_order(&pairing, &p).unwrap(), r(0, 1));
        assert!(matches!(
            Curve::diagonal(FamilyId::Group(3), &[1, 1, 1]),
            Err(TropicalError::InvalidCurve(_))
        ));
    }

    #[test]
    fn group_diagonal_strop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = Curve::diagonal(FamilyId::Group(3), &[1, 0, -1]).unwrap();
        assert_eq!(strop(&c, &mut rng, 8).unwrap(), vec![r(-1, 1), r(-1, 1)]);
    }

    #[test]
    fn pointed_preimage_strop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = pointed_preimage_curve(3, -2, 0).unwrap();
        let s = strop(&c, &mut rng, 8).unwrap();
        assert_eq!(s, vec![r(-1, 1), r(0, 1)]);
        assert!(in_valuation_cone(c.family(), &s));
        let c = pointed_preimage_curve(3, -2, 1).unwrap();
        assert_eq!(strop(&c, &mut rng, 8).unwrap(), vec![r(-1, 1), r(1, 2)]);
    }

    #[test]
    fn base_curves_have_zero_strop() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for id in FamilyId::SHIPPED {
            let Ok(family) = CurveFamily::try_from(id) else {
                continue;
            };
            let c = Curve::base(family).unwrap();
            assert!(strop(&c, &mut rng, 8).unwrap().iter().all(|v| *v == r(0, 1)));
        }
    }

    #[test]
    fn json_round_trip_and_validation() {
        let c = pointed_preimage_curve(3, -2, 1).unwrap();
        let back = Curve::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        let text = r#"{"family": "sl2plane", "coords": [
            {"ramification": 1, "terms": [[2, 1.0, 0.0], [3, 1.0, 0.0]]},
            {"ramification": 1, "truncation": 20, "terms": [[5, 1.0, 0.0]]}]}"#;
        let c = Curve::from_json(text).unwrap();
        assert_eq!(c.family(), CurveFamily::Sl2Plane);
        let bad = r#"{"family": "group3", "coords": []}"#;
        assert!(matches!(
            Curve::from_json(bad),
            Err(TropicalError::Json(_))
        ));
        assert!("sl2t".parse::<CurveFamily>().is_err());
    }

    #[test]
    fn limit_on_exact_constructions() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = pointed_preimage_curve(3, -2, 1).unwrap();
        let table = limit_check(&c, 0, &[0.1, 0.01], &mut rng, 8).unwrap();
        for row in &table.rows {
            assert!((row.value + 2.0).abs() < 1e-12);
            assert_eq!(row.target, -2.0);
        }
        let base = Curve::base(CurveFamily::Space(FamilyId::Triangles)).unwrap();
        let table = limit_check(&base, 2, &[0.5, 0.1], &mut rng, 8).unwrap();
        assert!(table.rows.iter().all(|r| r.value.abs() < 1e-12 && r.target == 0.0));
    }

    #[test]
    fn group_limit_converges_like_inverse_log() {
        // log_t((t² + 1 + t⁻²)/3) = −2 + ln(1/3)/ln t + O(t²/ln t).
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let c = Curve::diagonal(FamilyId::Group(3), &[1, 0, -1]).unwrap();
        let t: f64 = 1e-4;
        let table = limit_check(&c, 0, &[t], &mut rng, 8).unwrap();
        let row = &table.rows[0];
        assert_eq!(row.target, -2.0);
        let expect = (3f64.ln() / t.ln()).abs();
        assert!((row.deviation - expect).abs() < 1e-6);
        assert!((row.extrapolated.unwrap() + 2.0).abs() < 1e-6);
    }

    #[test]
    fn battery_is_valid() {
        let battery = curve_battery();
        assert!(battery.len() >= 10);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for nc in &battery {
            let s = strop(&nc.curve, &mut rng, 8).unwrap();
            assert!(in_valuation_cone(nc.curve.family(), &s), "{}", nc.name);
        }
    }
}
