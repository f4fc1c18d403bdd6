//! Truncated Puiseux series with complex coefficients.
//!
//! A series is stored as a ramification index `N`, a sparse map from exponent
//! numerators `k` to coefficients (the term `c * t^(k/N)`), and an optional
//! truncation bound `K`: every exponent `>= K/N` is unknown. A series without a
//! truncation bound is exact (a Laurent/Puiseux polynomial).
//!
//! Exponents are exact rationals, so orders of vanishing are exact even though
//! coefficients are `f64`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Coefficients with modulus at or below this value are pruned.
pub const ZERO_THRESHOLD: f64 = 1e-12;

/// Number of exponent steps (in units of `1/N`) kept past the leading term when
/// an exact series has to be expanded into an infinite one (inverse, square root).
pub const DEFAULT_PRECISION: i64 = 24;

/// A pruned coefficient larger than this fraction of the threshold marks the
/// result as lossy: it may have been a genuine small coefficient.
const NEAR_THRESHOLD_FRACTION: f64 = 1e-2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("order is indeterminate: no nonzero coefficient below the truncation t^({truncation}/{ramification})")]
    Indeterminate { truncation: i64, ramification: u32 },
    #[error("the exact zero series has no finite order")]
    Zero,
    #[error("ramification index must be at least 1")]
    InvalidRamification,
    #[error("term t^({numerator}/{ramification}) lies at or beyond the truncation t^({truncation}/{ramification})")]
    TermBeyondTruncation {
        numerator: i64,
        truncation: i64,
        ramification: u32,
    },
    #[error("non-finite coefficient for exponent numerator {0}")]
    NonFinite(i64),
}

/// Truncated Puiseux series `sum_k c_k t^(k/N) + O(t^(K/N))`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "SeriesJson", into = "SeriesJson")]
pub struct PuiseuxSeries {
    ramification: u32,
    terms: BTreeMap<i64, Complex64>,
    truncation: Option<i64>,
    lossy: bool,
}

/// Wire form: `{ "ramification": N, "truncation": K, "terms": [[k, re, im], ...] }`.
/// A missing or null truncation denotes an exact series.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesJson {
    pub ramification: u32,
    #[serde(default)]
    pub truncation: Option<i64>,
    pub terms: Vec<(i64, f64, f64)>,
}

impl TryFrom<SeriesJson> for PuiseuxSeries {
    type Error = SeriesError;

    fn try_from(value: SeriesJson) -> Result<Self, Self::Error> {
        PuiseuxSeries::new(
            value.ramification,
            value
                .terms
                .into_iter()
                .map(|(k, re, im)| (k, Complex64::new(re, im))),
            value.truncation,
        )
    }
}

impl From<PuiseuxSeries> for SeriesJson {
    fn from(s: PuiseuxSeries) -> Self {
        SeriesJson {
            ramification: s.ramification,
            truncation: s.truncation,
            terms: s.terms.iter().map(|(&k, c)| (k, c.re, c.im)).collect(),
        }
    }
}

impl PartialEq for PuiseuxSeries {
    fn eq(&self, other: &Self) -> bool {
        self.ramification == other.ramification
            && self.truncation == other.truncation
            && self.terms == other.terms
    }
}

fn prune(terms: &mut BTreeMap<i64, Complex64>) -> bool {
    let mut lossy = false;
    terms.retain(|_, c| {
        let m = c.norm();
        if m > ZERO_THRESHOLD {
            true
        } else {
            if m > ZERO_THRESHOLD * NEAR_THRESHOLD_FRACTION {
                lossy = true;
            }
            false
        }
    });
    lossy
}

fn min_opt(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

impl PuiseuxSeries {
    /// Builds a series; duplicate numerators are summed and small coefficients pruned.
    pub fn new(
        ramification: u32,
        terms: impl IntoIterator<Item = (i64, Complex64)>,
        truncation: Option<i64>,
    ) -> Result<Self, SeriesError> {
        if ramification == 0 {
            return Err(SeriesError::InvalidRamification);
        }
        let mut map = BTreeMap::new();
        for (k, c) in terms {
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(SeriesError::NonFinite(k));
            }
            if let Some(kt) = truncation {
                if k >= kt {
                    return Err(SeriesError::TermBeyondTruncation {
                        numerator: k,
                        truncation: kt,
                        ramification,
                    });
                }
            }
            *map.entry(k).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        Ok(Self::from_parts(ramification, map, truncation, false))
    }

    fn from_parts(
        ramification: u32,
        mut terms: BTreeMap<i64, Complex64>,
        truncation: Option<i64>,
        lossy: bool,
    ) -> Self {
        if let Some(kt) = truncation {
            terms.retain(|&k, _| k < kt);
        }
        let pruned = prune(&mut terms);
        let mut s = PuiseuxSeries {
            ramification,
            terms,
            truncation,
            lossy: lossy || pruned,
        };
        s.reduce_ramification();
        s
    }

    /// Exact zero.
    pub fn zero() -> Self {
        Self::from_parts(1, BTreeMap::new(), None, false)
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Self::monomial(c, 0, 1)
    }

    /// `c * t^(num/den)`, exact.
    pub fn monomial(c: Complex64, num: i64, den: u32) -> Self {
        assert!(den >= 1, "monomial denominator must be positive");
        let mut terms = BTreeMap::new();
        terms.insert(num, c);
        Self::from_parts(den, terms, None, false)
    }

    /// Exact Laurent polynomial `sum_i coeffs[i] * t^(min_pow + i)`.
    pub fn laurent(min_pow: i64, coeffs: &[Complex64]) -> Self {
        let terms = coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| (min_pow + i as i64, c))
            .collect();
        Self::from_parts(1, terms, None, false)
    }

    /// Same series with everything at or beyond `t^e` forgotten.
    pub fn truncated(&self, e: Rational64) -> Self {
        let n = (self.ramification as i64).lcm(e.denom());
        let s = self.with_ramification(n as u32);
        let k = min_opt(s.truncation, Some(e.numer() * (n / e.denom())));
        Self::from_parts(s.ramification, s.terms, k, s.lossy)
    }

    pub fn ramification(&self) -> u32 {
        self.ramification
    }

    pub fn truncation(&self) -> Option<i64> {
        self.truncation
    }

    /// Truncation bound as an exact exponent, `None` for exact series.
    pub fn truncation_exponent(&self) -> Option<Rational64> {
        self.truncation
            .map(|k| Rational64::new(k, self.ramification as i64))
    }

    pub fn is_exact(&self) -> bool {
        self.truncation.is_none()
    }

    /// True when some pruned coefficient was close enough to the zero threshold
    /// that it may have been a genuine (tiny) coefficient.
    pub fn is_lossy(&self) -> bool {
        self.lossy
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.terms.iter().map(|(&k, &c)| (k, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// True when no coefficient is stored (zero up to the truncation).
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of `t^e`, `None` if `e` is at or beyond the truncation.
    pub fn coefficient(&self, e: Rational64) -> Option<Complex64> {
        if let Some(k) = self.truncation_exponent() {
            if e >= k {
                return None;
            }
        }
        let scaled = e * Rational64::from_integer(self.ramification as i64);
        if !scaled.is_integer() {
            return Some(Complex64::new(0.0, 0.0));
        }
        Some(
            self.terms
                .get(&scaled.to_integer())
                .copied()
                .unwrap_or_default(),
        )
    }

    pub fn order_numerator(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    /// Exact order of vanishing `min { k/N : c_k != 0 }`.
    pub fn order(&self) -> Result<Rational64, SeriesError> {
        match (self.order_numerator(), self.truncation) {
            (Some(k), _) => Ok(Rational64::new(k, self.ramification as i64)),
            (None, Some(kt)) => Err(SeriesError::Indeterminate {
                truncation: kt,
                ramification: self.ramification,
            }),
            (None, None) => Err(SeriesError::Zero),
        }
    }

    pub fn leading_coefficient(&self) -> Result<Complex64, SeriesError> {
        self.order()?;
        Ok(*self.terms.values().next().expect("order implies a term"))
    }

    /// Re-express with ramification `n`, which must be a multiple of the current one.
    pub fn with_ramification(&self, n: u32) -> Self {
        assert!(
            n % self.ramification == 0,
            "ramification {n} is not a multiple of {}",
            self.ramification
        );
        let f = (n / self.ramification) as i64;
        PuiseuxSeries {
            ramification: n,
            terms: self.terms.iter().map(|(&k, &c)| (k * f, c)).collect(),
            truncation: self.truncation.map(|k| k * f),
            lossy: self.lossy,
        }
    }

    fn reduce_ramification(&mut self) {
        let mut g = self.ramification as i64;
        for &k in self.terms.keys() {
            g = g.gcd(&k);
        }
        if let Some(k) = self.truncation {
            g = g.gcd(&k);
        }
        if g > 1 {
            self.ramification /= g as u32;
            self.terms = std::mem::take(&mut self.terms)
                .into_iter()
                .map(|(k, c)| (k / g, c))
                .collect();
            self.truncation = self.truncation.map(|k| k / g);
        }
    }

    fn common(a: &Self, b: &Self) -> (Self, Self) {
        let n = (a.ramification as u64).lcm(&(b.ramification as u64)) as u32;
        (a.with_ramification(n), b.with_ramification(n))
    }

    pub fn add_series(&self, other: &Self) -> Self {
        let (a, b) = Self::common(self, other);
        let mut terms = a.terms;
        for (k, c) in b.terms {
            *terms.entry(k).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        Self::from_parts(
            a.ramification,
            terms,
            min_opt(a.truncation, b.truncation),
            a.lossy || b.lossy,
        )
    }

    pub fn sub_series(&self, other: &Self) -> Self {
        self.add_series(&other.negate())
    }

    pub fn negate(&self) -> Self {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_parts(
            self.ramification,
            self.terms.iter().map(|(&k, &v)| (k, v * c)).collect(),
            self.truncation,
            self.lossy,
        )
    }

    fn is_exact_zero(&self) -> bool {
        self.terms.is_empty() && self.truncation.is_none()
    }

    pub fn mul_series(&self, other: &Self) -> Self {
        if self.is_exact_zero() || other.is_exact_zero() {
            return Self::zero();
        }
        let (a, b) = Self::common(self, other);
        // Lower bound on the order numerator; an empty truncated series is
        // only known to vanish below its truncation.
        let lower = |s: &Self| s.order_numerator().or(s.truncation).unwrap();
        let truncation = min_opt(
            a.truncation.map(|k| k + lower(&b)),
            b.truncation.map(|k| k + lower(&a)),
        );
        let mut terms = BTreeMap::new();
        for (&ka, &ca) in &a.terms {
            for (&kb, &cb) in &b.terms {
                let k = ka + kb;
                if truncation.is_some_and(|kt| k >= kt) {
                    continue;
                }
                *terms.entry(k).or_insert(Complex64::new(0.0, 0.0)) += ca * cb;
            }
        }
        Self::from_parts(a.ramification, terms, truncation, a.lossy || b.lossy)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = acc.mul_series(self);
        }
        acc
    }

    /// Splits `self = c0 t^(lead/N) (1 + u)` and returns `(c0, lead, u)` where `u`
    /// has positive order and relative truncation `precision`.
    fn factor_leading(&self, precision: i64) -> Result<(Complex64, i64, Self), SeriesError> {
        let lead = self.order().map(|_| self.order_numerator().unwrap())?;
        let c0 = self.terms[&lead];
        let rest = self
            .terms
            .iter()
            .skip(1)
            .map(|(&k, &c)| (k - lead, c / c0))
            .collect();
        let rest: BTreeMap<i64, Complex64> = rest;
        // A lone exact monomial inverts (and square-roots) exactly.
        let truncation = if self.is_exact() && rest.is_empty() {
            None
        } else {
            Some(precision)
        };
        let u = Self::from_parts(self.ramification, rest, truncation, self.lossy);
        Ok((c0, lead, u))
    }

    fn relative_precision(&self, lead: i64) -> i64 {
        match self.truncation {
            Some(k) => k - lead,
            None => DEFAULT_PRECISION,
        }
    }

    /// Sums `sum_j coeff(j) u^j` with `u` of positive order, stopping once the
    /// powers of `u` vanish below the truncation.
    fn power_series_in(u: &Self, mut coeff: impl FnMut(usize) -> Complex64) -> Self {
        if u.is_exact_zero() {
            return Self::constant(coeff(0));
        }
        let mut first = BTreeMap::new();
        first.insert(0, coeff(0));
        let mut result = Self::from_parts(u.ramification, first, u.truncation, false);
        let bound = u.truncation_exponent().expect("u carries a truncation");
        let mut power = Self::one();
        let mut j = 1;
        loop {
            power = power.mul_series(u).truncated(bound);
            if power.is_empty() {
                break;
            }
            result = result.add_series(&power.scale(coeff(j)));
            j += 1;
        }
        result
    }

    /// Multiplicative inverse, expanded as a geometric series after factoring
    /// out the leading term.
    pub fn invert(&self) -> Result<Self, SeriesError> {
        let lead = self.order().map(|_| self.order_numerator().unwrap())?;
        self.invert_with_precision(self.relative_precision(lead))
    }

    /// Inverse keeping `precision` exponent steps past the leading term.
    pub fn invert_with_precision(&self, precision: i64) -> Result<Self, SeriesError> {
        let (c0, lead, u) = self.factor_leading(precision)?;
        let geometric = Self::power_series_in(&u, |j| {
            if j % 2 == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(-1.0, 0.0)
            }
        });
        let shift = Self::monomial(c0.inv(), -lead, self.ramification);
        Ok(geometric.mul_series(&shift))
    }

    /// Principal square root (principal branch on the leading coefficient),
    /// via the binomial series of `(1 + u)^(1/2)`.
    pub fn sqrt(&self) -> Result<Self, SeriesError> {
        let lead = self.order().map(|_| self.order_numerator().unwrap())?;
        self.sqrt_with_precision(self.relative_precision(lead))
    }

    pub fn sqrt_with_precision(&self, precision: i64) -> Result<Self, SeriesError> {
        let (c0, lead, u) = self.factor_leading(precision)?;
        let mut binom = Vec::<f64>::new();
        let binomial = Self::power_series_in(&u, |j| {
            let b = if j == 0 {
                1.0
            } else {
                binom[j - 1] * (0.5 - (j as f64 - 1.0)) / j as f64
            };
            binom.push(b);
            Complex64::new(b, 0.0)
        });
        let shift = Self::monomial(c0.sqrt(), lead, 2 * self.ramification);
        Ok(binomial.mul_series(&shift))
    }

    /// Numerical value of the stored terms at a real `t0 > 0`, using the real
    /// positive root for fractional powers.
    pub fn evaluate(&self, t0: f64) -> Complex64 {
        let n = self.ramification as f64;
        self.terms
            .iter()
            .map(|(&k, &c)| c * t0.powf(k as f64 / n))
            .sum()
    }
}

impl fmt::Display for PuiseuxSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() && self.truncation.is_none() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&k, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let e = Rational64::new(k, self.ramification as i64);
            write!(f, "({}{:+}i) t^{}", c.re, c.im, e)?;
        }
        if let Some(e) = self.truncation_exponent() {
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "O(t^{e})")?;
        }
        Ok(())
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $inner:ident) => {
        impl $tr<&PuiseuxSeries> for &PuiseuxSeries {
            type Output = PuiseuxSeries;
            fn $method(self, rhs: &PuiseuxSeries) -> PuiseuxSeries {
                PuiseuxSeries::$inner(self, rhs)
            }
        }
        impl $tr for PuiseuxSeries {
            type Output = PuiseuxSeries;
            fn $method(self, rhs: PuiseuxSeries) -> PuiseuxSeries {
                PuiseuxSeries::$inner(&self, &rhs)
            }
        }
    };
}

forward_binop!(Add, add, add_series);
forward_binop!(Sub, sub, sub_series);
forward_binop!(Mul, mul, mul_series);

impl Neg for &PuiseuxSeries {
    type Output = PuiseuxSeries;
    fn neg(self) -> PuiseuxSeries {
        self.negate()
    }
}

impl Neg for PuiseuxSeries {
    type Output = PuiseuxSeries;
    fn neg(self) -> PuiseuxSeries {
        self.negate()
    }
}
