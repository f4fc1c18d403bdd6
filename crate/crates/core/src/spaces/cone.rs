//! Polyhedral cones in `R^s`, held both as ray generators and as halfspaces
//! `n · q <= 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack used when checking that rays satisfy halfspaces and when comparing
/// the two descriptions.
pub const CONE_TOLERANCE: f64 = 1e-12;
const CROSS_CHECK_SAMPLES: usize = 512;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConeError {
    #[error("vector has length {got}, cone lives in dimension {dim}")]
    Dimension { dim: usize, got: usize },
    #[error("ray {ray:?} violates halfspace {normal:?}")]
    RayOutside { ray: Vec<f64>, normal: Vec<f64> },
    #[error("ray and halfspace descriptions disagree at {0:?}")]
    Inconsistent(Vec<f64>),
    #[error("cone has no rays")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyCone {
    dim: usize,
    rays: Vec<Vec<f64>>,
    halfspaces: Vec<Vec<f64>>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves the symmetric positive definite system `m x = rhs` by Gaussian
/// elimination; `None` if `m` is numerically singular.
pub(crate) fn solve_small(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let k = rhs.len();
    let scale = m
        .iter()
        .flatten()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    for col in 0..k {
        let pivot = (col..k).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-12 * scale {
            return None;
        }
        m.swap(pivot, col);
        rhs.swap(pivot, col);
        for i in col + 1..k {
            let f = m[i][col] / m[col][col];
            for j in col..k {
                m[i][j] -= f * m[col][j];
            }
            rhs[i] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| m[i][j] * x[j]).sum();
        x[i] = (rhs[i] - s) / m[i][i];
    }
    Some(x)
}

/// Index subsets of `0..n` with at most `max_len` elements.
pub(crate) fn small_subsets(n: usize, max_len: usize) -> Vec<Vec<usize>> {
    (0..=max_len.min(n))
        .flat_map(|k| crate::matrixkit::subsets(n, k))
        .collect()
}

impl PolyCone {
    /// Builds a cone and cross-checks the two descriptions on a deterministic
    /// random sample.
    pub fn new(
        dim: usize,
        rays: Vec<Vec<f64>>,
        halfspaces: Vec<Vec<f64>>,
    ) -> Result<Self, ConeError> {
        if rays.is_empty() {
            return Err(ConeError::Empty);
        }
        for v in rays.iter().chain(&halfspaces) {
            if v.len() != dim {
                return Err(ConeError::Dimension { dim, got: v.len() });
            }
        }
        for r in &rays {
            for h in &halfspaces {
                if dot(r, h) > CONE_TOLERANCE * norm(r) * norm(h) {
                    return Err(ConeError::RayOutside {
                        ray: r.clone(),
                        normal: h.clone(),
                    });
                }
            }
        }
        let cone = PolyCone {
            dim,
            rays,
            halfspaces,
        };
        cone.cross_check()?;
        Ok(cone)
    }

    /// The whole space `R^dim`, generated by `±e_i`.
    pub fn whole_space(dim: usize) -> Self {
        let mut rays = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            for sign in [1.0, -1.0] {
                let mut e = vec![0.0; dim];
                e[i] = sign;
                rays.push(e);
            }
        }
        PolyCone {
            dim,
            rays,
            halfspaces: Vec::new(),
        }
    }

    fn cross_check(&self) -> Result<(), ConeError> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x636f6e65);
        for _ in 0..CROSS_CHECK_SAMPLES {
            let q: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let by_halfspaces = self.contains(&q, 1e-9);
            let by_rays = self.ray_distance(&q) <= 1e-9;
            if by_halfspaces != by_rays {
                return Err(ConeError::Inconsistent(q));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rays(&self) -> &[Vec<f64>] {
        &self.rays
    }

    pub fn halfspaces(&self) -> &[Vec<f64>] {
        &self.halfspaces
    }

    /// Largest normalised violation `max(n·q / |n|)`; `None` for the whole space.
    pub fn halfspace_slack(&self, q: &[f64]) -> Option<f64> {
        self.halfspaces
            .iter()
            .map(|h| dot(h, q) / norm(h))
            .reduce(f64::max)
    }

    pub fn contains(&self, q: &[f64], tol: f64) -> bool {
        self.halfspace_slack(q).map_or(true, |s| s <= tol)
    }

    /// Euclidean distance from `q` to the cone computed from the ray
    /// description: least squares on every linearly independent subset of
    /// rays, keeping solutions with nonnegative coefficients.
    pub fn ray_distance(&self, q: &[f64]) -> f64 {
        let mut best = norm(q);
        for subset in small_subsets(self.rays.len(), self.dim) {
            if subset.is_empty() {
                continue;
            }
            let vecs: Vec<&Vec<f64>> = subset.iter().map(|&i| &self.rays[i]).collect();
            let gram: Vec<Vec<f64>> = vecs
                .iter()
                .map(|a| vecs.iter().map(|b| dot(a, b)).collect())
                .collect();
            let rhs: Vec<f64> = vecs.iter().map(|a| dot(a, q)).collect();
            let Some(coef) = solve_small(gram, rhs) else {
                continue;
            };
            if coef.iter().any(|&c| c < -CONE_TOLERANCE) {
                continue;
            }
            let resid: Vec<f64> = (0..self.dim)
                .map(|k| q[k] - vecs.iter().zip(&coef).map(|(v, c)| c * v[k]).sum::<f64>())
                .collect();
            best = best.min(norm(&resid));
        }
        best
    }

    /// Coefficients of `q` in the ray basis when the rays form a basis.
    pub fn ray_coordinates(&self, q: &[f64]) -> Option<Vec<f64>> {
        if self.rays.len() != self.dim {
            return None;
        }
        let gram: Vec<Vec<f64>> = self
            .rays
            .iter()
            .map(|a| self.rays.iter().map(|b| dot(a, b)).collect())
            .collect();
        let rhs: Vec<f64> = self.rays.iter().map(|a| dot(a, q)).collect();
        solve_small(gram, rhs)
    }
}
