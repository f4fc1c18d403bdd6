//! Small dense complex matrices: determinants, minors, singular values and
//! random elements of `SL_n(C)` and `SU_n`.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Off-diagonal Frobenius mass (relative to the whole matrix) below which the
/// Jacobi iteration stops.
pub const JACOBI_TOLERANCE: f64 = 1e-14;
/// Maximum number of cyclic Jacobi sweeps.
pub const JACOBI_SWEEP_CAP: usize = 64;

const SINGULAR_DET: f64 = 1e-8;
const SAMPLE_RETRIES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("row set has {rows} indices but column set has {cols}")]
    SizeMismatch { rows: usize, cols: usize },
    #[error("index set {0:?} is not a strictly increasing subset of 0..{1}")]
    BadIndexSet(Vec<usize>, usize),
    #[error("Jacobi eigensolver did not converge in {0} sweeps")]
    NoConvergence(usize),
    #[error("matrix is singular")]
    Singular,
    #[error("could not draw a well-conditioned sample after {0} attempts")]
    SamplingExhausted(usize),
}

/// Dense `n x n` complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// Standard complex Gaussian: real and imaginary parts `N(0, 1/2)`.
pub fn standard_complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn check_index_set(set: &[usize], n: usize) -> Result<(), MatrixError> {
    let ok = set.iter().all(|&i| i < n) && set.windows(2).all(|w| w[0] < w[1]);
    if ok {
        Ok(())
    } else {
        Err(MatrixError::BadIndexSet(set.to_vec(), n))
    }
}

impl ComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "matrix dimension must be at least 1");
        ComplexMatrix {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds from row slices; panics if the rows do not form a square matrix.
    pub fn from_rows<R: AsRef<[Complex64]>>(rows: &[R]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            assert_eq!(row.len(), n, "row {i} has the wrong length");
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cplx: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.as_ref().iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&cplx)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks(self.n)
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        ComplexMatrix {
            n: self.n,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        ComplexMatrix {
            n: self.n,
            data: self.data.iter().map(|&z| z * c).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let n = self.n;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                for j in 0..n {
                    m[(i, j)] += a * other[(k, j)];
                }
            }
        }
        m
    }

    pub fn mat_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.n, "dimension mismatch");
        self.rows()
            .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Squared Frobenius norm.
    pub fn frobenius_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let k = rows.len();
        let mut m = Self::zeros(k);
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                m[(a, b)] = self[(i, j)];
            }
        }
        m
    }

    /// Determinant: cofactor expansion for `n <= 3`, partially pivoted LU above.
    pub fn det(&self) -> Complex64 {
        let a = |i, j| self[(i, j)];
        match self.n {
            1 => a(0, 0),
            2 => a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0),
            3 => {
                a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
                    - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
                    + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
            }
            _ => self.det_lu(),
        }
    }

    fn det_lu(&self) -> Complex64 {
        let n = self.n;
        let mut m = self.clone();
        let mut det = Complex64::new(1.0, 0.0);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| m[(i, col)].norm().total_cmp(&m[(j, col)].norm()))
                .unwrap();
            if m[(pivot, col)].norm() == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            if pivot != col {
                for j in 0..n {
                    m.data.swap(pivot * n + j, col * n + j);
                }
                det = -det;
            }
            let p = m[(col, col)];
            det *= p;
            for i in col + 1..n {
                let f = m[(i, col)] / p;
                for j in col..n {
                    let v = m[(col, j)];
                    m[(i, j)] -= f * v;
                }
            }
        }
        det
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Self, MatrixError> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm()))
                .unwrap();
            if a[(pivot, col)].norm() < 1e-300 {
                return Err(MatrixError::Singular);
            }
            for j in 0..n {
                a.data.swap(pivot * n + j, col * n + j);
                inv.data.swap(pivot * n + j, col * n + j);
            }
            let p = a[(col, col)].inv();
            for j in 0..n {
                a[(col, j)] *= p;
                inv[(col, j)] *= p;
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a[(i, col)];
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    let (av, iv) = (a[(col, j)], inv[(col, j)]);
                    a[(i, j)] -= f * av;
                    inv[(i, j)] -= f * iv;
                }
            }
        }
        Ok(inv)
    }

    /// Minor on (0-based, strictly increasing) rows `rows` and columns `cols`.
    pub fn minor(&self, rows: &[usize], cols: &[usize]) -> Result<Complex64, MatrixError> {
        if rows.len() != cols.len() {
            return Err(MatrixError::SizeMismatch {
                rows: rows.len(),
                cols: cols.len(),
            });
        }
        check_index_set(rows, self.n)?;
        check_index_set(cols, self.n)?;
        if rows.is_empty() {
            return Ok(Complex64::new(1.0, 0.0));
        }
        Ok(self.submatrix(rows, cols).det())
    }

    /// Flag minor: rows `rows`, first `rows.len()` columns.
    pub fn flag_minor(&self, rows: &[usize]) -> Result<Complex64, MatrixError> {
        let cols: Vec<usize> = (0..rows.len()).collect();
        self.minor(rows, &cols)
    }

    /// Singular values in descending order, from the eigenvalues of `A* A`.
    pub fn singular_values(&self) -> Result<Vec<f64>, MatrixError> {
        let gram = self.adjoint().matmul(self);
        let mut eig = hermitian_eigenvalues(&gram)?;
        eig.iter_mut().for_each(|v| *v = v.max(0.0).sqrt());
        eig.sort_by(|a, b| b.total_cmp(a));
        Ok(eig)
    }

    /// Draws i.i.d. standard complex Gaussian entries and rescales by the
    /// principal `n`-th root of the determinant so that `det = 1`.
    pub fn random_special_linear<R: Rng + ?Sized>(
        n: usize,
        rng: &mut R,
    ) -> Result<Self, MatrixError> {
        for _ in 0..SAMPLE_RETRIES {
            let mut m = Self::zeros(n);
            m.data
                .iter_mut()
                .for_each(|z| *z = standard_complex_gaussian(rng));
            let d = m.det();
            if d.norm() < SINGULAR_DET {
                continue;
            }
            let root = (d.ln() / n as f64).exp();
            let m = m.scale(root.inv());
            if (m.det() - 1.0).norm() < 1e-12 {
                return Ok(m);
            }
        }
        Err(MatrixError::SamplingExhausted(SAMPLE_RETRIES))
    }

    /// Haar-distributed element of `SU_n`: the `Q` factor of a complex Gaussian
    /// matrix, with the first column multiplied by `det(Q)^{-1}`.
    pub fn random_special_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        loop {
            let cols: Vec<Vec<Complex64>> = (0..n)
                .map(|_| (0..n).map(|_| standard_complex_gaussian(rng)).collect())
                .collect();
            if let Some(q) = gram_schmidt(&cols) {
                let mut u = Self::zeros(n);
                for (j, col) in q.iter().enumerate() {
                    for i in 0..n {
                        u[(i, j)] = col[i];
                    }
                }
                let d = u.det();
                let phase = (d / d.norm()).conj();
                for i in 0..n {
                    u[(i, 0)] *= phase;
                }
                return u;
            }
        }
    }
}

/// Orthonormalises the columns (modified Gram-Schmidt, two passes). Classical
/// Gram-Schmidt gives `R` a positive real diagonal, so `Q` is Haar-distributed
/// when the columns are complex Gaussian.
fn gram_schmidt(cols: &[Vec<Complex64>]) -> Option<Vec<Vec<Complex64>>> {
    let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    };
    let mut q: Vec<Vec<Complex64>> = Vec::with_capacity(cols.len());
    for col in cols {
        let mut v = col.clone();
        for _ in 0..2 {
            for qk in &q {
                let r = dot(qk, &v);
                v.iter_mut().zip(qk).for_each(|(x, y)| *x -= r * y);
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-10 {
            return None;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        q.push(v);
    }
    Some(q)
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations.
pub fn hermitian_eigenvalues(h: &ComplexMatrix) -> Result<Vec<f64>, MatrixError> {
    let n = h.dim();
    let mut a = h.clone();
    let total = a.frobenius_sqr().sqrt();
    if total == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let off = |a: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };
    for _ in 0..JACOBI_SWEEP_CAP {
        if off(&a) < JACOBI_TOLERANCE * total {
            return Ok((0..n).map(|i| a[(i, i)].re).collect());
        }
        for p in 0..n {
            for q in p + 1..n {
                let h_pq = a[(p, q)];
                let r = h_pq.norm();
                if r == 0.0 {
                    continue;
                }
                let phase = h_pq / r;
                let (app, aqq) = (a[(p, p)].re, a[(q, q)].re);
                let theta = (aqq - app) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // U = diag(1, conj(phase)) * [[c, s], [-s, c]] on the (p, q) plane.
                let u_pp = Complex64::new(c, 0.0);
                let u_pq = Complex64::new(s, 0.0);
                let u_qp = -phase.conj() * s;
                let u_qq = phase.conj() * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = akp * u_pp + akq * u_qp;
                    a[(k, q)] = akp * u_pq + akq * u_qq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
                    a[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)] = a[(p, p)].re.into();
                a[(q, q)] = a[(q, q)].re.into();
            }
        }
    }
    if off(&a) < JACOBI_TOLERANCE * total {
        return Ok((0..n).map(|i| a[(i, i)].re).collect());
    }
    Err(MatrixError::NoConvergence(JACOBI_SWEEP_CAP))
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// All strictly increasing `k`-subsets of `0..n`, in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}
