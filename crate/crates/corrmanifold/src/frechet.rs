//! Fréchet means, geometric medians, and variation for correlation samples.
//!
//! Under the flat coordinate geometries both centroids reduce to vector-space
//! problems: the mean is the coordinate average mapped back, the median runs
//! Weiszfeld's iteration on coordinates. Under the affine-invariant metric
//! the mean needs the Karcher fixed-point iteration and the median a
//! Riemannian Weiszfeld; both return SPD-valued centers, since the set of
//! unit-diagonal matrices is not totally geodesic in S++.

use nalgebra::{DMatrix, DVector};

use crate::geometry::{
    self, CoordinateSet, FlatGeometry, GeometryError, GeometryKind,
};
use crate::linalg;
use crate::tol;
use crate::types::{CorrelationMatrix, SampleSet, SpdMatrix};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FrechetError {
    #[error("center dimension {center} does not match sample dimension {sample}")]
    DimensionMismatch { center: usize, sample: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Exponent of the Fréchet functional: 1 for the median, 2 for the mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Exponent {
    One,
    Two,
}

impl Exponent {
    fn apply(self, d: f64) -> f64 {
        match self {
            Exponent::One => d,
            Exponent::Two => d * d,
        }
    }
}

/// Centroids under the flat geometries stay on the correlation manifold;
/// affine-invariant centroids live in the ambient SPD cone.
#[derive(Debug, Clone, PartialEq)]
pub enum CentroidPoint {
    Correlation(CorrelationMatrix),
    Spd(SpdMatrix),
}

impl CentroidPoint {
    pub fn dim(&self) -> usize {
        match self {
            CentroidPoint::Correlation(c) => c.dim(),
            CentroidPoint::Spd(s) => s.dim(),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        match self {
            CentroidPoint::Correlation(c) => c.matrix(),
            CentroidPoint::Spd(s) => s.matrix(),
        }
    }

    pub fn as_correlation(&self) -> Option<&CorrelationMatrix> {
        match self {
            CentroidPoint::Correlation(c) => Some(c),
            CentroidPoint::Spd(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CentroidFlag {
    /// Center is SPD-valued rather than a correlation matrix.
    SpdCenter,
    /// Mapped sample coordinates are collinear; the median may be non-unique.
    CollinearSample,
    /// Weiszfeld iterates entered a two-cycle around a data point.
    AnchorOscillation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentroidResult {
    pub center: CentroidPoint,
    pub variation: f64,
    pub iterations: usize,
    pub converged: bool,
    pub flags: Vec<CentroidFlag>,
}

fn coordinate_mean(coords: &CoordinateSet) -> DVector<f64> {
    let m = coords.len();
    let d = coords.dim();
    let mut out = DVector::zeros(d);
    let mut row = vec![0.0; m];
    for i in 0..d {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = coords.coords()[(i, j)];
        }
        out[i] = linalg::pairwise_sum(&row) / m as f64;
    }
    out
}

pub fn frechet_mean(s: &SampleSet, geometry: GeometryKind) -> Result<CentroidResult, FrechetError> {
    match geometry {
        GeometryKind::Ecm => flat_mean(s, FlatGeometry::Ecm),
        GeometryKind::Lec => flat_mean(s, FlatGeometry::Lec),
        GeometryKind::Airm => karcher_mean(s),
        GeometryKind::Qam(_) => Err(GeometryError::UnsupportedGeometry {
            operation: "frechet_mean",
            geometry: geometry.name(),
        }
        .into()),
    }
}

fn flat_mean(s: &SampleSet, flat: FlatGeometry) -> Result<CentroidResult, FrechetError> {
    let coords = CoordinateSet::from_samples(s, flat)?;
    let mean = coordinate_mean(&coords);
    let center = coords.point_to_corr(&mean)?;
    let m = coords.len();
    let sq: Vec<f64> = (0..m)
        .map(|i| (coords.point(i) - &mean).norm_squared())
        .collect();
    let variation = linalg::pairwise_sum(&sq) / m as f64;
    Ok(CentroidResult {
        center: CentroidPoint::Correlation(center),
        variation,
        iterations: 1,
        converged: true,
        flags: Vec::new(),
    })
}

/// Whitened log maps at base point with Cholesky factor g: for each sample x,
/// log(g^-1 x g^-T). The Frobenius norm of each term is the distance to x.
fn whitened_logs(
    g: &DMatrix<f64>,
    s: &SampleSet,
) -> Result<Vec<DMatrix<f64>>, GeometryError> {
    let mut out = Vec::with_capacity(s.len());
    for i in 0..s.len() {
        let w = geometry::whiten(g, s.get(i).matrix())?;
        let (vals, vecs) = linalg::sym_eigen(&w);
        for &v in &vals {
            if v <= 0.0 {
                return Err(GeometryError::EigenvalueUnderflow { value: v });
            }
        }
        let scaled = DMatrix::from_fn(w.nrows(), w.ncols(), |r, c| vecs[(r, c)] * vals[c].ln());
        let mut log = &scaled * vecs.transpose();
        linalg::symmetrize_mut(&mut log);
        out.push(log);
    }
    Ok(out)
}

fn karcher_mean(s: &SampleSet) -> Result<CentroidResult, FrechetError> {
    let n = s.dim();
    let m = s.len() as f64;
    let mut p = DMatrix::zeros(n, n);
    for i in 0..s.len() {
        p += s.get(i).matrix();
    }
    p /= m;
    let mut best: Option<(DMatrix<f64>, f64)> = None;
    let mut iterations = 0;
    for _ in 0..tol::KARCHER_MAX_ITERATIONS {
        iterations += 1;
        let g = linalg::cholesky_lower(&p).ok_or(GeometryError::CholeskyFailure)?;
        let logs = whitened_logs(&g, s)?;
        let variation = logs.iter().map(|l| l.norm_squared()).sum::<f64>() / m;
        if best.as_ref().is_none_or(|(_, v)| variation < *v) {
            best = Some((p.clone(), variation));
        }
        let mut tangent = DMatrix::zeros(n, n);
        for l in &logs {
            tangent += l;
        }
        tangent /= m;
        if tangent.norm() < tol::KARCHER_TOLERANCE {
            return Ok(CentroidResult {
                center: CentroidPoint::Spd(SpdMatrix::from_valid(p)),
                variation,
                iterations,
                converged: true,
                flags: vec![CentroidFlag::SpdCenter],
            });
        }
        let step = linalg::sym_matrix_function(&tangent, f64::exp);
        p = &g * step * g.transpose();
        linalg::symmetrize_mut(&mut p);
    }
    let (center, variation) = best.expect("at least one iteration ran");
    Ok(CentroidResult {
        center: CentroidPoint::Spd(SpdMatrix::from_valid(center)),
        variation,
        iterations,
        converged: false,
        flags: vec![CentroidFlag::SpdCenter],
    })
}

pub fn frechet_median(
    s: &SampleSet,
    geometry: GeometryKind,
    max_iter: usize,
    tolerance: f64,
) -> Result<CentroidResult, FrechetError> {
    match geometry {
        GeometryKind::Ecm => flat_median(s, FlatGeometry::Ecm, max_iter, tolerance),
        GeometryKind::Lec => flat_median(s, FlatGeometry::Lec, max_iter, tolerance),
        GeometryKind::Airm => riemannian_median(s, max_iter, tolerance),
        GeometryKind::Qam(_) => Err(GeometryError::UnsupportedGeometry {
            operation: "frechet_median",
            geometry: geometry.name(),
        }
        .into()),
    }
}

/// Rank of the centered coordinate cloud is at most one.
fn is_collinear(coords: &CoordinateSet, mean: &DVector<f64>) -> bool {
    let m = coords.len();
    let mut centered = coords.coords().clone();
    for j in 0..m {
        let mut col = centered.column_mut(j);
        col -= mean;
    }
    let singular = centered.svd(false, false).singular_values;
    singular
        .iter()
        .filter(|&&v| v > tol::RANK_SINGULAR_VALUE_TOL)
        .count()
        <= 1
}

struct WeiszfeldStep {
    next: DVector<f64>,
    /// Optimality certificate at an anchor: residual pull does not exceed
    /// the anchor multiplicity.
    at_optimum: bool,
}

fn weiszfeld_step(points: &[DVector<f64>], x: &DVector<f64>) -> WeiszfeldStep {
    let dim = x.len();
    let mut weight_sum = 0.0;
    let mut weighted = DVector::zeros(dim);
    let mut pull = DVector::zeros(dim);
    let mut anchors = 0usize;
    for p in points {
        let d = (p - x).norm();
        if d < tol::WEISZFELD_ANCHOR_RADIUS {
            anchors += 1;
            continue;
        }
        weight_sum += 1.0 / d;
        weighted.axpy(1.0 / d, p, 1.0);
        pull.axpy(1.0 / d, &(p - x), 1.0);
    }
    if anchors == points.len() {
        return WeiszfeldStep {
            next: x.clone(),
            at_optimum: true,
        };
    }
    let t = weighted / weight_sum;
    if anchors == 0 {
        return WeiszfeldStep {
            next: t,
            at_optimum: false,
        };
    }
    let r = pull.norm();
    if r <= anchors as f64 {
        return WeiszfeldStep {
            next: x.clone(),
            at_optimum: true,
        };
    }
    let pull_share = anchors as f64 / r;
    WeiszfeldStep {
        next: t * (1.0 - pull_share) + x * pull_share,
        at_optimum: false,
    }
}

fn flat_median(
    s: &SampleSet,
    flat: FlatGeometry,
    max_iter: usize,
    tolerance: f64,
) -> Result<CentroidResult, FrechetError> {
    let coords = CoordinateSet::from_samples(s, flat)?;
    let m = coords.len();
    let points: Vec<DVector<f64>> = (0..m).map(|i| coords.point(i)).collect();
    let f1 = |x: &DVector<f64>| {
        let d: Vec<f64> = points.iter().map(|p| (p - x).norm()).collect();
        linalg::pairwise_sum(&d) / m as f64
    };
    let mut flags = Vec::new();
    let mut x = coordinate_mean(&coords);
    if is_collinear(&coords, &x) {
        flags.push(CentroidFlag::CollinearSample);
    }
    let mut previous: Option<DVector<f64>> = None;
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        let step = weiszfeld_step(&points, &x);
        if step.at_optimum || (&step.next - &x).norm() < tolerance {
            x = step.next;
            converged = true;
            break;
        }
        if let Some(prev) = &previous {
            if (&step.next - prev).norm() < tolerance {
                // two-cycle; keep the better endpoint
                flags.push(CentroidFlag::AnchorOscillation);
                if f1(&step.next) < f1(&x) {
                    x = step.next;
                }
                break;
            }
        }
        previous = Some(std::mem::replace(&mut x, step.next));
    }
    let variation = f1(&x);
    let center = coords.point_to_corr(&x)?;
    Ok(CentroidResult {
        center: CentroidPoint::Correlation(center),
        variation,
        iterations,
        converged,
        flags,
    })
}

fn riemannian_median(
    s: &SampleSet,
    max_iter: usize,
    tolerance: f64,
) -> Result<CentroidResult, FrechetError> {
    let n = s.dim();
    let m = s.len();
    let mut p = DMatrix::zeros(n, n);
    for i in 0..m {
        p += s.get(i).matrix();
    }
    p /= m as f64;
    let f1_of = |logs: &[DMatrix<f64>]| {
        let d: Vec<f64> = logs.iter().map(|l| l.norm()).collect();
        linalg::pairwise_sum(&d) / m as f64
    };
    let mut flags = vec![CentroidFlag::SpdCenter];
    let mut converged = false;
    let mut iterations = 0;
    let mut g = linalg::cholesky_lower(&p).ok_or(GeometryError::CholeskyFailure)?;
    let mut logs = whitened_logs(&g, s)?;
    let mut value = f1_of(&logs);
    for _ in 0..max_iter {
        iterations += 1;
        // weighted tangent step in the whitened chart at p
        let mut weight_sum = 0.0;
        let mut direction = DMatrix::zeros(n, n);
        let mut anchors = 0usize;
        let mut pull = DMatrix::zeros(n, n);
        for l in &logs {
            let d = l.norm();
            if d < tol::WEISZFELD_ANCHOR_RADIUS {
                anchors += 1;
                continue;
            }
            weight_sum += 1.0 / d;
            direction += l / d;
            pull += l / d;
        }
        if anchors == m || (anchors > 0 && pull.norm() <= anchors as f64) {
            converged = true;
            break;
        }
        direction /= weight_sum;
        if direction.norm() < tolerance {
            converged = true;
            break;
        }
        // damped geodesic update with a monotonicity safeguard on the value
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let step = linalg::sym_matrix_function(&(&direction * alpha), f64::exp);
            let mut candidate = &g * &step * g.transpose();
            linalg::symmetrize_mut(&mut candidate);
            let Some(g_new) = linalg::cholesky_lower(&candidate) else {
                alpha *= 0.5;
                continue;
            };
            let logs_new = whitened_logs(&g_new, s)?;
            let value_new = f1_of(&logs_new);
            if value_new <= value {
                let moved = (&candidate - &p).norm();
                p = candidate;
                g = g_new;
                logs = logs_new;
                let done = value - value_new < tolerance * value.max(1.0) && moved < tolerance;
                value = value_new;
                accepted = true;
                if done {
                    converged = true;
                }
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // no improving step at any damping; treat as stationary
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }
    if !converged {
        flags.push(CentroidFlag::AnchorOscillation);
    }
    Ok(CentroidResult {
        center: CentroidPoint::Spd(SpdMatrix::from_valid(p)),
        variation: value,
        iterations,
        converged,
        flags,
    })
}

pub fn frechet_variation(
    s: &SampleSet,
    center: &CentroidPoint,
    p: Exponent,
    geometry: GeometryKind,
) -> Result<f64, FrechetError> {
    if center.dim() != s.dim() {
        return Err(FrechetError::DimensionMismatch {
            center: center.dim(),
            sample: s.dim(),
        });
    }
    let m = s.len();
    let mut terms = Vec::with_capacity(m);
    match center {
        CentroidPoint::Correlation(c) => {
            for i in 0..m {
                terms.push(p.apply(geometry::distance(geometry, c, s.get(i))?));
            }
        }
        CentroidPoint::Spd(spd) => {
            if !matches!(geometry, GeometryKind::Airm) {
                return Err(GeometryError::UnsupportedGeometry {
                    operation: "frechet_variation at an SPD-valued center",
                    geometry: geometry.name(),
                }
                .into());
            }
            for i in 0..m {
                terms.push(p.apply(geometry::airm_distance_raw(
                    spd.matrix(),
                    s.get(i).matrix(),
                )?));
            }
        }
    }
    Ok(linalg::pairwise_sum(&terms) / m as f64)
}
