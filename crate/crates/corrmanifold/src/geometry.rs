//! Metric structures on the manifold of full-rank correlation matrices.
//!
//! Two of the geometries are flat in disguise. Every correlation matrix C
//! factors uniquely as C = D L L' D with L unit lower-triangular and D the
//! positive diagonal that restores the unit diagonal; the map C -> L (the
//! row-normalized Cholesky factor) is a diffeomorphism onto the unit
//! lower-triangular matrices. Composing with the triangular matrix logarithm
//! lands in the strict lower-triangular matrices, a plain linear space.
//! Pulling the Frobenius metric back through either map gives:
//!
//! * `Ecm`: distance is the Frobenius distance of row-normalized Cholesky
//!   factors;
//! * `Lec`: distance is the Frobenius distance of their triangular logs
//!   (cf. the quotient-of-Cholesky constructions of Thanwerdas & Pennec).
//!
//! Both admit closed-form geodesics, means, and medians through coordinate
//! arithmetic: map once per matrix, work in a vector space, map back.
//!
//! The remaining geometries price accuracy differently:
//!
//! * `Airm`: the affine-invariant metric on symmetric positive-definite
//!   matrices, d(P,Q) = ||log(P^{-1/2} Q P^{-1/2})||_F, restricted to the
//!   elliptope. One generalized eigendecomposition per distance.
//! * `Qam`: the quotient of AIRM by positive diagonal congruence,
//!   d(P,Q) = min_D d_AIRM(P, DQD). Each distance is a smooth optimization
//!   over the n scaling exponents, solved here by gradient descent with
//!   backtracking; an analytic gradient keeps the cost at one
//!   eigendecomposition per function evaluation.
//!
//! Triangular logs and exponentials use the finite nilpotent series: for a
//! unit lower-triangular Z with N = Z - I, N^n = 0, so
//! log Z = sum_{k=1}^{n-1} (-1)^{k-1} N^k / k and the exponential series for
//! a strict lower-triangular S stops at S^{n-1} / (n-1)!. Powers gain one
//! empty subdiagonal per factor, which the multiplication exploits, and the
//! loop exits early once a power vanishes identically.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::linalg;
use crate::tol;
use crate::types::{CorrelationMatrix, SampleSet, SpdMatrix, StrictLowerTriangular, UnitLowerTriangular};

/// Settings for the quotient-metric scaling optimization.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct QamSettings {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// Distances are refused for matrices larger than this.
    pub dim_cap: usize,
}

impl Default for QamSettings {
    fn default() -> Self {
        Self {
            max_iterations: tol::QAM_MAX_ITERATIONS,
            gradient_tolerance: tol::QAM_GRADIENT_TOLERANCE,
            dim_cap: tol::QAM_DIMENSION_CAP,
        }
    }
}

/// The four supported metric structures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeometryKind {
    Ecm,
    Lec,
    Airm,
    Qam(QamSettings),
}

impl GeometryKind {
    /// Quotient metric with default settings.
    pub fn qam() -> Self {
        GeometryKind::Qam(QamSettings::default())
    }

    pub fn name(&self) -> &'static str {
        match self {
            GeometryKind::Ecm => "ecm",
            GeometryKind::Lec => "lec",
            GeometryKind::Airm => "airm",
            GeometryKind::Qam(_) => "qam",
        }
    }
}

impl serde::Serialize for GeometryKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// The two coordinate-based geometries, used by algorithms that need a
/// global flat parametrization (means in closed form, clustering, kernels,
/// embeddings).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlatGeometry {
    Ecm,
    Lec,
}

impl FlatGeometry {
    pub fn to_kind(self) -> GeometryKind {
        match self {
            FlatGeometry::Ecm => GeometryKind::Ecm,
            FlatGeometry::Lec => GeometryKind::Lec,
        }
    }

    pub fn name(self) -> &'static str {
        self.to_kind().name()
    }
}

impl serde::Serialize for FlatGeometry {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("Cholesky factorization failed on a matrix that should be positive definite")]
    CholeskyFailure,
    #[error("whitened matrix has a non-positive eigenvalue ({value:.3e})")]
    EigenvalueUnderflow { value: f64 },
    #[error("{operation} is not available under the {geometry} geometry")]
    UnsupportedGeometry {
        operation: &'static str,
        geometry: &'static str,
    },
    #[error("quotient metric refused at dimension {dim} (cap {cap})")]
    QamDimensionCap { dim: usize, cap: usize },
    #[error("coordinate vector has length {got}, expected {expected}")]
    BadCoordinateLength { got: usize, expected: usize },
}

/// Row-normalized Cholesky factor: C = chol(C) with every row divided by its
/// diagonal pivot, so the result is unit lower-triangular.
pub fn unit_cholesky(c: &CorrelationMatrix) -> Result<UnitLowerTriangular, GeometryError> {
    let l = linalg::cholesky_lower(c.matrix()).ok_or(GeometryError::CholeskyFailure)?;
    let n = c.dim();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        let pivot = l[(i, i)];
        if !(pivot > 0.0) {
            return Err(GeometryError::CholeskyFailure);
        }
        for j in 0..i {
            out[(i, j)] = l[(i, j)] / pivot;
        }
        out[(i, i)] = 1.0;
    }
    Ok(UnitLowerTriangular::from_valid(out))
}

/// Inverse of [`unit_cholesky`]: rescale L L' back to unit diagonal. Total on
/// unit lower-triangular inputs, since L L' is positive definite whenever L
/// has unit diagonal.
pub fn corr_from_unit_cholesky(l: &UnitLowerTriangular) -> CorrelationMatrix {
    let lm = l.matrix();
    let mut s = lm * lm.transpose();
    let n = l.dim();
    let inv_sqrt: Vec<f64> = (0..n).map(|i| 1.0 / s[(i, i)].sqrt()).collect();
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    CorrelationMatrix::from_valid(s)
}

/// Triangular matrix logarithm via the finite nilpotent series.
pub fn log_unit_lower(z: &UnitLowerTriangular) -> StrictLowerTriangular {
    let n = z.dim();
    let zm = z.matrix();
    let mut nil = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            nil[(i, j)] = zm[(i, j)];
        }
    }
    let mut acc = nil.clone();
    let mut power = nil.clone();
    for k in 2..n {
        power = linalg::mul_lower_shifted(&power, k - 1, &nil, 1);
        if power.iter().all(|&v| v == 0.0) {
            break;
        }
        let coef = if k % 2 == 0 { -1.0 } else { 1.0 } / k as f64;
        for j in 0..n - k {
            for i in (j + k)..n {
                acc[(i, j)] += coef * power[(i, j)];
            }
        }
    }
    StrictLowerTriangular::from_valid(acc)
}

/// Triangular matrix exponential via the finite nilpotent series.
pub fn exp_strict_lower(s: &StrictLowerTriangular) -> UnitLowerTriangular {
    let n = s.dim();
    let sm = s.matrix();
    let mut acc = DMatrix::identity(n, n);
    acc += sm;
    let mut power = sm.clone();
    let mut factorial = 1.0;
    for k in 2..n {
        power = linalg::mul_lower_shifted(&power, k - 1, sm, 1);
        if power.iter().all(|&v| v == 0.0) {
            break;
        }
        factorial *= k as f64;
        let coef = 1.0 / factorial;
        for j in 0..n - k {
            for i in (j + k)..n {
                acc[(i, j)] += coef * power[(i, j)];
            }
        }
    }
    UnitLowerTriangular::from_valid(acc)
}

/// Dimension of the flat coordinate space at matrix size `n`.
pub fn coord_dim(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Half-vectorized flat coordinates (strict lower triangle, row-major).
pub fn to_coords(geometry: FlatGeometry, c: &CorrelationMatrix) -> Result<DVector<f64>, GeometryError> {
    let l = unit_cholesky(c)?;
    let m = match geometry {
        FlatGeometry::Ecm => l.into_matrix(),
        FlatGeometry::Lec => log_unit_lower(&l).into_matrix(),
    };
    let n = m.nrows();
    let mut v = DVector::zeros(coord_dim(n));
    let mut idx = 0;
    for i in 1..n {
        for j in 0..i {
            v[idx] = m[(i, j)];
            idx += 1;
        }
    }
    Ok(v)
}

/// Inverse of [`to_coords`]; total for every coordinate vector of the right
/// length.
pub fn from_coords(
    geometry: FlatGeometry,
    v: &DVector<f64>,
    n: usize,
) -> Result<CorrelationMatrix, GeometryError> {
    let expected = coord_dim(n);
    if v.len() != expected {
        return Err(GeometryError::BadCoordinateLength {
            got: v.len(),
            expected,
        });
    }
    let mut m = DMatrix::zeros(n, n);
    let mut idx = 0;
    for i in 1..n {
        for j in 0..i {
            m[(i, j)] = v[idx];
            idx += 1;
        }
    }
    let unit = match geometry {
        FlatGeometry::Ecm => {
            for i in 0..n {
                m[(i, i)] = 1.0;
            }
            UnitLowerTriangular::from_valid(m)
        }
        FlatGeometry::Lec => exp_strict_lower(&StrictLowerTriangular::from_valid(m)),
    };
    Ok(corr_from_unit_cholesky(&unit))
}

/// Distance between two correlation matrices under the selected geometry.
///
/// Under `Qam` the optimizer's best value is returned even when the gradient
/// tolerance was not reached within the iteration cap; use [`qam_distance`]
/// to observe the convergence flag.
pub fn distance(
    geometry: GeometryKind,
    a: &CorrelationMatrix,
    b: &CorrelationMatrix,
) -> Result<f64, GeometryError> {
    if a.dim() != b.dim() {
        return Err(GeometryError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    match geometry {
        GeometryKind::Ecm => {
            let la = unit_cholesky(a)?;
            let lb = unit_cholesky(b)?;
            Ok((la.matrix() - lb.matrix()).norm())
        }
        GeometryKind::Lec => {
            let sa = log_unit_lower(&unit_cholesky(a)?);
            let sb = log_unit_lower(&unit_cholesky(b)?);
            Ok((sa.matrix() - sb.matrix()).norm())
        }
        GeometryKind::Airm => airm_distance_raw(a.matrix(), b.matrix()),
        GeometryKind::Qam(settings) => Ok(qam_distance(a, b, settings)?.distance),
    }
}

/// Affine-invariant distance between symmetric positive-definite matrices.
pub fn airm_distance_spd(p: &SpdMatrix, q: &SpdMatrix) -> Result<f64, GeometryError> {
    if p.dim() != q.dim() {
        return Err(GeometryError::DimensionMismatch {
            left: p.dim(),
            right: q.dim(),
        });
    }
    airm_distance_raw(p.matrix(), q.matrix())
}

pub(crate) fn airm_distance_raw(p: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<f64, GeometryError> {
    let l = linalg::cholesky_lower(p).ok_or(GeometryError::CholeskyFailure)?;
    let white = whiten(&l, q)?;
    let eigs = linalg::sym_eigenvalues(&white);
    let mut acc = 0.0;
    for &lambda in eigs.iter() {
        if lambda <= 0.0 {
            return Err(GeometryError::EigenvalueUnderflow { value: lambda });
        }
        let ln = lambda.ln();
        acc += ln * ln;
    }
    Ok(acc.sqrt())
}

/// L^{-1} Q L^{-T} for lower-triangular L; symmetric up to round-off and
/// symmetrized on return.
pub(crate) fn whiten(l: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>, GeometryError> {
    let y = l
        .solve_lower_triangular(q)
        .ok_or(GeometryError::CholeskyFailure)?;
    let mut a = l
        .solve_lower_triangular(&y.transpose())
        .ok_or(GeometryError::CholeskyFailure)?
        .transpose();
    linalg::symmetrize_mut(&mut a);
    Ok(a)
}

/// Detailed result of the quotient-metric optimization.
#[derive(Debug, Clone)]
pub struct QamOutcome {
    pub distance: f64,
    pub iterations: usize,
    /// Whether the gradient norm fell below the tolerance before the cap.
    pub converged: bool,
    pub gradient_norm: f64,
    /// Optimal log-scalings t, with the minimizing diagonal D = exp(diag(t)).
    pub scaling: DVector<f64>,
}

/// Quotient-metric distance d(P,Q) = min over positive diagonal D of
/// d_AIRM(P, D Q D), minimized over the log-scalings by gradient descent
/// with Armijo backtracking from D = I.
///
/// Starting at D = I makes the result monotonically bounded by the plain
/// affine-invariant distance. When the iteration cap is reached the best
/// value found is still reported, with `converged == false`.
pub fn qam_distance(
    a: &CorrelationMatrix,
    b: &CorrelationMatrix,
    settings: QamSettings,
) -> Result<QamOutcome, GeometryError> {
    let n = a.dim();
    if b.dim() != n {
        return Err(GeometryError::DimensionMismatch {
            left: n,
            right: b.dim(),
        });
    }
    if n > settings.dim_cap {
        return Err(GeometryError::QamDimensionCap {
            dim: n,
            cap: settings.dim_cap,
        });
    }
    let l = linalg::cholesky_lower(a.matrix()).ok_or(GeometryError::CholeskyFailure)?;
    let q = b.matrix();

    let scaled = |t: &DVector<f64>| -> DMatrix<f64> {
        let e: Vec<f64> = t.iter().map(|&v| v.exp()).collect();
        DMatrix::from_fn(n, n, |i, j| q[(i, j)] * e[i] * e[j])
    };
    // Squared distance as a function of the log-scalings; +inf signals a
    // numerically indefinite whitened matrix so the line search backs off.
    let eval = |t: &DVector<f64>| -> Result<f64, GeometryError> {
        let white = whiten(&l, &scaled(t))?;
        let eigs = linalg::sym_eigenvalues(&white);
        let mut acc = 0.0;
        for &lambda in eigs.iter() {
            if lambda <= 0.0 {
                return Ok(f64::INFINITY);
            }
            let ln = lambda.ln();
            acc += ln * ln;
        }
        Ok(acc)
    };
    // Value and analytic gradient. With A = L^{-1} S L^{-T} and
    // G = 2 L^{-T} U diag(log(lam)/lam) U' L^{-1} (the Euclidean gradient in
    // S), the chain rule through S = DQD gives df/dt_k = 2 (G S)_{kk}.
    let eval_grad = |t: &DVector<f64>| -> Result<(f64, DVector<f64>), GeometryError> {
        let s = scaled(t);
        let white = whiten(&l, &s)?;
        let (values, vectors) = linalg::sym_eigen(&white);
        let mut f = 0.0;
        for &lambda in values.iter() {
            if lambda <= 0.0 {
                return Err(GeometryError::EigenvalueUnderflow { value: lambda });
            }
            let ln = lambda.ln();
            f += ln * ln;
        }
        let mut scaled_vecs = vectors.clone();
        for j in 0..n {
            let w = values[j].ln() / values[j];
            scaled_vecs.column_mut(j).scale_mut(w);
        }
        let core = &scaled_vecs * vectors.transpose();
        // G = 2 L^{-T} core L^{-1}
        let lt = l.transpose();
        let t1 = lt
            .solve_upper_triangular(&core)
            .ok_or(GeometryError::CholeskyFailure)?;
        let g_s = lt
            .solve_upper_triangular(&t1.transpose())
            .ok_or(GeometryError::CholeskyFailure)?
            .transpose()
            * 2.0;
        let gs = &g_s * &s;
        let grad = DVector::from_fn(n, |k, _| 2.0 * gs[(k, k)]);
        Ok((f, grad))
    };

    let mut t = DVector::zeros(n);
    let (mut f, mut grad) = eval_grad(&t)?;
    let mut best_f = f;
    let mut best_t = t.clone();
    let mut grad_norm = grad.norm();
    let mut converged = grad_norm <= settings.gradient_tolerance;
    let mut iterations = 0;
    // Barzilai-Borwein seed for the backtracking step; plain descent steps
    // crawl once the iterate enters the quadratic basin.
    let mut previous: Option<(DVector<f64>, DVector<f64>)> = None;
    let mut fallback_step = 1.0_f64;
    while !converged && iterations < settings.max_iterations {
        iterations += 1;
        let g2 = grad_norm * grad_norm;
        let seed = previous
            .as_ref()
            .and_then(|(tp, gp)| {
                let s = &t - tp;
                let y = &grad - gp;
                let sy = s.dot(&y);
                let yy = y.dot(&y);
                (sy > 0.0 && yy > 0.0).then(|| sy / yy)
            })
            .unwrap_or(fallback_step);
        let mut alpha = seed.clamp(1e-12, 1e6);
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &t - &grad * alpha;
            let fc = eval(&cand)?;
            if fc <= f - 1e-4 * alpha * g2 {
                previous = Some((t.clone(), grad.clone()));
                t = cand;
                f = fc;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break; // flat to machine precision along -grad
        }
        fallback_step = alpha * 4.0;
        if f < best_f {
            best_f = f;
            best_t = t.clone();
        }
        let (fg, g) = eval_grad(&t)?;
        f = fg;
        grad = g;
        grad_norm = grad.norm();
        converged = grad_norm <= settings.gradient_tolerance;
    }
    Ok(QamOutcome {
        distance: best_f.max(0.0).sqrt(),
        iterations,
        converged,
        gradient_norm: grad_norm,
        scaling: best_t,
    })
}

/// Points along the geodesic through `a` (t = 0) and `b` (t = 1); the grid
/// may extrapolate outside [0, 1]. Closed-form for the flat geometries only.
pub fn geodesic(
    geometry: GeometryKind,
    a: &CorrelationMatrix,
    b: &CorrelationMatrix,
    grid: &[f64],
) -> Result<Vec<CorrelationMatrix>, GeometryError> {
    if a.dim() != b.dim() {
        return Err(GeometryError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let flat = match geometry {
        GeometryKind::Ecm => FlatGeometry::Ecm,
        GeometryKind::Lec => FlatGeometry::Lec,
        other => {
            return Err(GeometryError::UnsupportedGeometry {
                operation: "geodesic",
                geometry: other.name(),
            })
        }
    };
    let ca = to_coords(flat, a)?;
    let cb = to_coords(flat, b)?;
    let n = a.dim();
    grid.iter()
        .map(|&tt| {
            let v = &ca * (1.0 - tt) + &cb * tt;
            from_coords(flat, &v, n)
        })
        .collect()
}

/// Flat coordinates of a whole sample, one column per item.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateSet {
    geometry: FlatGeometry,
    n: usize,
    coords: DMatrix<f64>,
}

impl CoordinateSet {
    pub fn from_samples(s: &SampleSet, geometry: FlatGeometry) -> Result<Self, GeometryError> {
        let n = s.dim();
        let dim = coord_dim(n);
        let mut coords = DMatrix::zeros(dim, s.len());
        for (idx, item) in s.items().iter().enumerate() {
            let v = to_coords(geometry, item)?;
            coords.set_column(idx, &v);
        }
        Ok(Self {
            geometry,
            n,
            coords,
        })
    }

    pub fn geometry(&self) -> FlatGeometry {
        self.geometry
    }

    /// Matrix dimension of the original samples.
    pub fn matrix_dim(&self) -> usize {
        self.n
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.coords.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.ncols() == 0
    }

    /// Coordinate dimension n(n-1)/2.
    pub fn dim(&self) -> usize {
        self.coords.nrows()
    }

    /// One column per sample.
    pub fn coords(&self) -> &DMatrix<f64> {
        &self.coords
    }

    pub fn point(&self, i: usize) -> DVector<f64> {
        self.coords.column(i).into_owned()
    }

    pub fn point_to_corr(&self, v: &DVector<f64>) -> Result<CorrelationMatrix, GeometryError> {
        from_coords(self.geometry, v, self.n)
    }

    pub fn euclidean_distance(&self, i: usize, j: usize) -> f64 {
        (self.coords.column(i) - self.coords.column(j)).norm()
    }
}

/// Symmetric matrix of pairwise distances with an exactly zero diagonal.
///
/// Flat geometries map every sample once and measure in coordinates; the
/// iterative geometries evaluate one solve per pair (in parallel when a
/// rayon pool with more than one thread is installed).
pub fn pairwise_distances(
    s: &SampleSet,
    geometry: GeometryKind,
) -> Result<DMatrix<f64>, GeometryError> {
    let m = s.len();
    let mut out = DMatrix::zeros(m, m);
    match geometry {
        GeometryKind::Ecm | GeometryKind::Lec => {
            let flat = if matches!(geometry, GeometryKind::Ecm) {
                FlatGeometry::Ecm
            } else {
                FlatGeometry::Lec
            };
            let cs = CoordinateSet::from_samples(s, flat)?;
            for i in 0..m {
                for j in (i + 1)..m {
                    let d = cs.euclidean_distance(i, j);
                    out[(i, j)] = d;
                    out[(j, i)] = d;
                }
            }
        }
        GeometryKind::Airm | GeometryKind::Qam(_) => {
            let pairs: Vec<(usize, usize)> = (0..m)
                .flat_map(|i| ((i + 1)..m).map(move |j| (i, j)))
                .collect();
            let computed: Result<Vec<f64>, GeometryError> = pairs
                .par_iter()
                .map(|&(i, j)| distance(geometry, s.get(i), s.get(j)))
                .collect();
            let computed = computed?;
            for (&(i, j), &d) in pairs.iter().zip(computed.iter()) {
                out[(i, j)] = d;
                out[(j, i)] = d;
            }
        }
    }
    Ok(out)
}
