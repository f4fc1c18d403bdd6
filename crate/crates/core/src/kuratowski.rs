//! Desk-scale metrics for Kuratowski convergence of amoeba clouds to a cone:
//! the directed discrepancy (cloud to cone) for condition (a) and the grid
//! coverage gap (cone to cloud) for condition (b).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::slog::{amoeba, AmoebaCloud, AmoebaConfig, SlogError};
use crate::spaces::{dot, norm, small_subsets, solve_small, FamilyId, PolyCone};

/// Feasibility slack for face projections, relative to `|q|`.
const FACE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum KuratowskiError {
    #[error("no cloud points inside the window [-{0}, {0}]^s; increase samples or the window")]
    EmptyWindow(f64),
    #[error("no grid points of step {h} inside the cone within [-{r}, {r}]^s")]
    EmptyGrid { h: f64, r: f64 },
    #[error("cloud is empty")]
    EmptyCloud,
    #[error("invalid {name} = {value}")]
    BadParameter { name: &'static str, value: f64 },
    #[error("point has dimension {got}, cone has {expected}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Slog(#[from] SlogError),
}

/// Exact Euclidean distance from `q` to the cone: projects `q` onto the
/// linear span of every active set of halfspaces (at most `s` at a time) and
/// keeps the nearest feasible projection.
pub fn dist_point_to_cone(q: &[f64], cone: &PolyCone) -> f64 {
    let h = cone.halfspaces();
    if h.is_empty() {
        return 0.0;
    }
    let tol = FACE_TOLERANCE * norm(q).max(1.0);
    let feasible = |x: &[f64]| h.iter().all(|n| dot(n, x) <= tol * norm(n));
    if feasible(q) {
        return 0.0;
    }
    // The apex is always feasible.
    let mut best = norm(q);
    for active in small_subsets(h.len(), cone.dim()) {
        if active.is_empty() {
            continue;
        }
        let normals: Vec<&Vec<f64>> = active.iter().map(|&i| &h[i]).collect();
        let gram: Vec<Vec<f64>> = normals
            .iter()
            .map(|a| normals.iter().map(|b| dot(a, b)).collect())
            .collect();
        let rhs: Vec<f64> = normals.iter().map(|a| dot(a, q)).collect();
        let Some(lambda) = solve_small(gram, rhs) else {
            continue;
        };
        let x: Vec<f64> = (0..q.len())
            .map(|k| q[k] - normals.iter().zip(&lambda).map(|(n, l)| l * n[k]).sum::<f64>())
            .collect();
        if feasible(&x) {
            let d: Vec<f64> = q.iter().zip(&x).map(|(a, b)| a - b).collect();
            best = best.min(norm(&d));
        }
    }
    best
}

fn in_box(q: &[f64], r: f64) -> bool {
    q.iter().all(|v| v.abs() <= r)
}

fn check_positive(name: &'static str, value: f64) -> Result<(), KuratowskiError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(KuratowskiError::BadParameter { name, value })
    }
}

/// Largest distance to the cone over cloud points with max-norm `<= r`,
/// together with the number of such points.
pub fn directed_discrepancy_counted(
    cloud: &AmoebaCloud,
    cone: &PolyCone,
    r: f64,
) -> Result<(f64, usize), KuratowskiError> {
    check_positive("window", r)?;
    let inside: Vec<&Vec<f64>> = cloud.points.iter().filter(|q| in_box(q, r)).collect();
    if inside.is_empty() {
        return Err(KuratowskiError::EmptyWindow(r));
    }
    if let Some(q) = inside.iter().find(|q| q.len() != cone.dim()) {
        return Err(KuratowskiError::Dimension {
            expected: cone.dim(),
            got: q.len(),
        });
    }
    let d = inside
        .par_iter()
        .map(|q| dist_point_to_cone(q, cone))
        .reduce(|| 0.0, f64::max);
    Ok((d, inside.len()))
}

pub fn directed_discrepancy(cloud: &AmoebaCloud, cone: &PolyCone, r: f64) -> Result<f64, KuratowskiError> {
    directed_discrepancy_counted(cloud, cone, r).map(|(d, _)| d)
}

/// Points `-r + k h` per axis lying in the cone (within `1e-12`).
pub fn cone_grid(cone: &PolyCone, r: f64, h: f64) -> Vec<Vec<f64>> {
    let steps = (2.0 * r / h + 1e-9).floor() as usize;
    let axis: Vec<f64> = (0..=steps).map(|k| -r + k as f64 * h).collect();
    let s = cone.dim();
    let total = axis.len().pow(s as u32);
    (0..total)
        .map(|mut idx| {
            (0..s)
                .map(|_| {
                    let v = axis[idx % axis.len()];
                    idx /= axis.len();
                    v
                })
                .collect::<Vec<f64>>()
        })
        .filter(|q| cone.contains(q, FACE_TOLERANCE))
        .collect()
}

fn sqr_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Largest distance from a cone grid point in `[-r, r]^s` to its nearest
/// cloud point.
pub fn coverage_gap(cone: &PolyCone, cloud: &AmoebaCloud, r: f64, h: f64) -> Result<f64, KuratowskiError> {
    check_positive("window", r)?;
    check_positive("grid step", h)?;
    if cloud.points.is_empty() {
        return Err(KuratowskiError::EmptyCloud);
    }
    let grid = cone_grid(cone, r, h);
    if grid.is_empty() {
        return Err(KuratowskiError::EmptyGrid { h, r });
    }
    let worst = grid
        .par_iter()
        .map(|g| {
            cloud
                .points
                .iter()
                .map(|q| sqr_dist(g, q))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub t: f64,
    pub discrepancy: f64,
    pub coverage_gap: f64,
    pub n_in_window: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub family: FamilyId,
    pub window: f64,
    pub grid_step: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub stratified: bool,
    /// Rows ordered by decreasing `t`.
    pub rows: Vec<ConvergenceRow>,
    pub discrepancy_strictly_decreasing: bool,
    pub coverage_nonincreasing: bool,
}

/// Both metrics at each `t`. Every row reuses the same underlying samples
/// (same seed), so differences between rows come from `t` alone.
pub fn convergence_report(
    family: FamilyId,
    t_list: &[f64],
    n_samples: usize,
    seed: u64,
    stratified: bool,
    r: f64,
    h: f64,
) -> Result<ConvergenceReport, KuratowskiError> {
    check_positive("window", r)?;
    check_positive("grid step", h)?;
    let cone = family.valuation_cone();
    let mut ts = t_list.to_vec();
    ts.sort_by(|a, b| b.total_cmp(a));
    let mut cfg = AmoebaConfig::new(n_samples, seed);
    cfg.window = Some(r);
    cfg.stratified = stratified;
    let mut rows = Vec::with_capacity(ts.len());
    for t in ts {
        let cloud = amoeba(family, t, &cfg)?;
        let (discrepancy, n_in_window) = directed_discrepancy_counted(&cloud, &cone, r)?;
        let coverage_gap = coverage_gap(&cone, &cloud, r, h)?;
        rows.push(ConvergenceRow {
            t,
            discrepancy,
            coverage_gap,
            n_in_window,
        });
    }
    let discrepancy_strictly_decreasing = rows.windows(2).all(|w| w[1].discrepancy < w[0].discrepancy);
    let coverage_nonincreasing = rows.windows(2).all(|w| w[1].coverage_gap <= w[0].coverage_gap);
    Ok(ConvergenceReport {
        family,
        window: r,
        grid_step: h,
        n_samples,
        seed,
        stratified,
        rows,
        discrepancy_strictly_decreasing,
        coverage_nonincreasing,
    })
}

impl ConvergenceReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}
