//! Hyperbolic 3-space as the quaternions `z + j r` with `r > 0`, acted on from
//! the right by `SL_2(C)` through `P ↦ (dP − b)(a − cP)^{-1}`.

use num_complex::Complex64;
use thiserror::Error;

use crate::matrixkit::ComplexMatrix;

const DET_TOLERANCE: f64 = 1e-9;
const DEGENERATE_NORM: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("expected a 2x2 matrix, got {0}x{0}")]
    NotTwoByTwo(usize),
    #[error("determinant {0} is not 1")]
    NotSpecialLinear(Complex64),
    #[error("point has height {0}, outside the open upper half-space")]
    NotInterior(f64),
    #[error("denominator a - cP vanishes")]
    Degenerate,
}

/// Quaternion `z + j w` with `z, w` complex and `j z = z̄ j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub z: Complex64,
    pub w: Complex64,
}

impl Quaternion {
    pub fn new(z: Complex64, w: Complex64) -> Self {
        Quaternion { z, w }
    }

    pub fn scalar(z: Complex64) -> Self {
        Quaternion::new(z, Complex64::new(0.0, 0.0))
    }

    /// `(z1 + j w1)(z2 + j w2) = (z1 z2 − w̄1 w2) + j(z̄1 w2 + w1 z2)`.
    pub fn mul(self, o: Quaternion) -> Quaternion {
        Quaternion::new(
            self.z * o.z - self.w.conj() * o.w,
            self.z.conj() * o.w + self.w * o.z,
        )
    }

    pub fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.z + o.z, self.w + o.w)
    }

    pub fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.z - o.z, self.w - o.w)
    }

    pub fn conj(self) -> Quaternion {
        Quaternion::new(self.z.conj(), -self.w)
    }

    pub fn norm_sqr(self) -> f64 {
        self.z.norm_sqr() + self.w.norm_sqr()
    }

    pub fn inverse(self) -> Option<Quaternion> {
        let n = self.norm_sqr();
        if n.sqrt() < DEGENERATE_NORM {
            return None;
        }
        let c = self.conj();
        Some(Quaternion::new(c.z / n, c.w / n))
    }
}

/// Point `z + j r` of the upper half-space model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HPoint {
    pub z: Complex64,
    pub r: f64,
}

impl HPoint {
    pub fn new(z: Complex64, r: f64) -> Result<Self, GeomError> {
        if r > 0.0 && r.is_finite() {
            Ok(HPoint { z, r })
        } else {
            Err(GeomError::NotInterior(r))
        }
    }

    /// The base point `j`.
    pub fn j() -> Self {
        HPoint {
            z: Complex64::new(0.0, 0.0),
            r: 1.0,
        }
    }

    pub fn as_quaternion(self) -> Quaternion {
        Quaternion::new(self.z, Complex64::new(self.r, 0.0))
    }

    /// `cosh` of the hyperbolic distance to `other`.
    pub fn cosh_dist(self, other: HPoint) -> f64 {
        1.0 + ((self.z - other.z).norm_sqr() + (self.r - other.r).powi(2))
            / (2.0 * self.r * other.r)
    }
}

fn check_sl2(g: &ComplexMatrix) -> Result<(), GeomError> {
    if g.dim() != 2 {
        return Err(GeomError::NotTwoByTwo(g.dim()));
    }
    let d = g.det();
    if (d - 1.0).norm() >= DET_TOLERANCE {
        return Err(GeomError::NotSpecialLinear(d));
    }
    Ok(())
}

/// Right action `P^g = (dP − b)(a − cP)^{-1}` for `g = [[a, b], [c, d]]`.
pub fn act(p: HPoint, g: &ComplexMatrix) -> Result<HPoint, GeomError> {
    check_sl2(g)?;
    let q = p.as_quaternion();
    let (a, b, c, d) = (g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]);
    let num = Quaternion::scalar(d).mul(q).sub(Quaternion::scalar(b));
    let den = Quaternion::scalar(a).sub(Quaternion::scalar(c).mul(q));
    let out = num.mul(den.inverse().ok_or(GeomError::Degenerate)?);
    // For det g = 1 the j-component is real and positive; drop rounding noise.
    HPoint::new(out.z, out.w.re)
}

/// `cosh d(j, j^g) = ½ (|a|² + |b|² + |c|² + |d|²)`.
pub fn cosh_dist_j(g: &ComplexMatrix) -> Result<f64, GeomError> {
    check_sl2(g)?;
    Ok(0.5 * g.frobenius_sqr())
}

/// `cosh d(j^A, j^B) = cosh d(j, j^{B A^{-1}})`.
pub fn cosh_dist_pair(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64, GeomError> {
    check_sl2(a)?;
    check_sl2(b)?;
    // For det A = 1 the inverse is the adjugate.
    let adj = ComplexMatrix::from_rows(&[[a[(1, 1)], -a[(0, 1)]], [-a[(1, 0)], a[(0, 0)]]]);
    cosh_dist_j(&b.matmul(&adj))
}
