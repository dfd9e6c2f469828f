//! Squared-exponential kernels over the flat coordinate distances.
//!
//! k(A, B) = exp(-theta d^2(A, B)) with d either flat geometry's distance.
//! Squared flat distances are conditionally negative definite (they are
//! squared Euclidean distances of mapped coordinates), so by Schoenberg's
//! theorem the kernel is positive definite for every theta >= 0.

use nalgebra::{DMatrix, DVector};

use crate::geometry::{self, CoordinateSet, FlatGeometry, GeometryError};
use crate::linalg;
use crate::tol;
use crate::types::{CorrelationMatrix, SampleSet};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KernelError {
    #[error("bandwidth must be finite and nonnegative, got {theta}")]
    BadTheta { theta: f64 },
    #[error("noise variance must be finite and nonnegative, got {value}")]
    BadNoiseVariance { value: f64 },
    #[error("svr needs epsilon >= 0 and box constraint > 0, got {epsilon}, {box_constraint}")]
    BadSvrParams { epsilon: f64, box_constraint: f64 },
    #[error("sample set has no labels")]
    MissingLabels,
    #[error("query dimension {query} does not match training dimension {train}")]
    DimensionMismatch { query: usize, train: usize },
    #[error("kernel system singular even with jitter {max_jitter}")]
    SingularSystem { max_jitter: f64 },
    #[error("svr did not reach the KKT tolerance within {iterations} iterations")]
    NotConverged { iterations: usize },
    #[error("all kernel weights underflowed to zero; bandwidth too large for the data spread")]
    NumericalUnderflow,
    #[error("{folds}-fold tuning needs folds >= 2 and at least that many samples, got {samples}")]
    InsufficientData { samples: usize, folds: usize },
    #[error("empty tuning grid")]
    EmptyGrid,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Decades around the common default theta = 1.
pub const DEFAULT_THETA_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KernelSpec {
    pub theta: f64,
    pub geometry: FlatGeometry,
}

impl KernelSpec {
    pub fn new(theta: f64, geometry: FlatGeometry) -> Result<Self, KernelError> {
        if !theta.is_finite() || theta < 0.0 {
            return Err(KernelError::BadTheta { theta });
        }
        Ok(Self { theta, geometry })
    }

    fn value(&self, squared_distance: f64) -> f64 {
        (-self.theta * squared_distance).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    values: DMatrix<f64>,
}

impl GramMatrix {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }
}

pub fn gram(s: &SampleSet, spec: &KernelSpec) -> Result<GramMatrix, KernelError> {
    let coords = CoordinateSet::from_samples(s, spec.geometry)?;
    Ok(GramMatrix {
        values: gram_from_coords(&coords, spec),
    })
}

fn gram_from_coords(coords: &CoordinateSet, spec: &KernelSpec) -> DMatrix<f64> {
    let m = coords.len();
    let mut k = DMatrix::identity(m, m);
    for i in 0..m {
        for j in 0..i {
            let d = coords.euclidean_distance(i, j);
            let v = spec.value(d * d);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorKind {
    Gp,
    Kern,
    Svr,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RegressorParams {
    Gp { noise_variance: f64 },
    Kern,
    Svr { epsilon: f64, box_constraint: f64 },
}

impl RegressorParams {
    pub fn kind(&self) -> RegressorKind {
        match self {
            RegressorParams::Gp { .. } => RegressorKind::Gp,
            RegressorParams::Kern => RegressorKind::Kern,
            RegressorParams::Svr { .. } => RegressorKind::Svr,
        }
    }

    fn validate(&self) -> Result<(), KernelError> {
        match *self {
            RegressorParams::Gp { noise_variance } => {
                if !noise_variance.is_finite() || noise_variance < 0.0 {
                    return Err(KernelError::BadNoiseVariance {
                        value: noise_variance,
                    });
                }
            }
            RegressorParams::Kern => {}
            RegressorParams::Svr {
                epsilon,
                box_constraint,
            } => {
                if !epsilon.is_finite()
                    || epsilon < 0.0
                    || !box_constraint.is_finite()
                    || box_constraint <= 0.0
                {
                    return Err(KernelError::BadSvrParams {
                        epsilon,
                        box_constraint,
                    });
                }
            }
        }
        Ok(())
    }

    /// Tie-break key: prefer simpler models (smoother GP, tighter SVR box,
    /// wider tube).
    fn complexity(&self) -> (f64, f64) {
        match *self {
            RegressorParams::Gp { noise_variance } => (-noise_variance, 0.0),
            RegressorParams::Kern => (0.0, 0.0),
            RegressorParams::Svr {
                epsilon,
                box_constraint,
            } => (box_constraint, -epsilon),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum ModelInner {
    Gp {
        alpha: DVector<f64>,
        chol: DMatrix<f64>,
        jitter: Option<f64>,
    },
    Kern,
    Svr {
        beta: DVector<f64>,
        bias: f64,
        iterations: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressorModel {
    spec: KernelSpec,
    params: RegressorParams,
    coords: CoordinateSet,
    labels: Vec<f64>,
    inner: ModelInner,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub value: f64,
    /// Posterior variance; GP models only.
    pub variance: Option<f64>,
}

pub fn fit(
    s: &SampleSet,
    spec: KernelSpec,
    params: RegressorParams,
) -> Result<RegressorModel, KernelError> {
    params.validate()?;
    let labels = s.labels().ok_or(KernelError::MissingLabels)?.to_vec();
    let coords = CoordinateSet::from_samples(s, spec.geometry)?;
    let inner = match params {
        RegressorParams::Gp { noise_variance } => fit_gp(&coords, &spec, &labels, noise_variance)?,
        RegressorParams::Kern => ModelInner::Kern,
        RegressorParams::Svr {
            epsilon,
            box_constraint,
        } => fit_svr(&coords, &spec, &labels, epsilon, box_constraint)?,
    };
    Ok(RegressorModel {
        spec,
        params,
        coords,
        labels,
        inner,
    })
}

fn fit_gp(
    coords: &CoordinateSet,
    spec: &KernelSpec,
    labels: &[f64],
    noise_variance: f64,
) -> Result<ModelInner, KernelError> {
    let m = coords.len();
    let k = gram_from_coords(coords, spec);
    let y = DVector::from_column_slice(labels);
    let mut jitter_used = None;
    let mut jitter = 0.0;
    loop {
        let mut system = k.clone();
        for i in 0..m {
            system[(i, i)] += noise_variance + jitter;
        }
        if let Some(chol) = linalg::cholesky_lower(&system) {
            let mut alpha = y.clone();
            // forward then back substitution against L L^T
            let solved = nalgebra::Cholesky::<f64, nalgebra::Dyn>::pack_dirty(chol.clone())
                .solve(&alpha);
            alpha = solved;
            return Ok(ModelInner::Gp {
                alpha,
                chol,
                jitter: jitter_used,
            });
        }
        jitter = if jitter == 0.0 {
            tol::GP_JITTER_INITIAL
        } else {
            jitter * 10.0
        };
        if jitter > tol::GP_JITTER_MAX {
            return Err(KernelError::SingularSystem {
                max_jitter: tol::GP_JITTER_MAX,
            });
        }
        jitter_used = Some(jitter);
    }
}

/// Epsilon-insensitive SVR dual solved by SMO with second-order working-set
/// selection (Fan, Chen, and Lin, 2005).
///
/// Variables z = [alpha; alpha*] in [0, C]^2m with constraint sum s_t z_t = 0,
/// s = [+1; -1]; Q_ab = s_a s_b K_ab; p = [eps - y; eps + y]. The violation
/// score v_t = -s_t g_t brackets the bias: max over the up-movable set must
/// not exceed the min over the down-movable set at optimality. Stopping tests
/// that maximal-violating-pair gap; the update pair instead maximizes the
/// one-step gain (v_i - v_t)^2 / curvature, which keeps progress healthy when
/// a near-flat kernel drives pair curvatures toward zero.
fn fit_svr(
    coords: &CoordinateSet,
    spec: &KernelSpec,
    labels: &[f64],
    epsilon: f64,
    box_constraint: f64,
) -> Result<ModelInner, KernelError> {
    let m = coords.len();
    let k = gram_from_coords(coords, spec);
    let sign = |t: usize| if t < m { 1.0 } else { -1.0 };
    let kval = |a: usize, b: usize| k[(a % m, b % m)];
    let mut z = vec![0.0_f64; 2 * m];
    let mut g: Vec<f64> = (0..2 * m)
        .map(|t| {
            if t < m {
                epsilon - labels[t]
            } else {
                epsilon + labels[t - m]
            }
        })
        .collect();
    let mut iterations = 0;
    let curvature_of = |a: usize, b: usize| {
        (kval(a, a) + kval(b, b) - 2.0 * sign(a) * sign(b) * kval(a, b)).max(1e-12)
    };
    let (bias, converged) = loop {
        let mut up: Option<(usize, f64)> = None;
        let mut low: Option<(usize, f64)> = None;
        for t in 0..2 * m {
            let v = -sign(t) * g[t];
            let movable_up = if sign(t) > 0.0 {
                z[t] < box_constraint
            } else {
                z[t] > 0.0
            };
            let movable_down = if sign(t) > 0.0 {
                z[t] > 0.0
            } else {
                z[t] < box_constraint
            };
            if movable_up && up.as_ref().is_none_or(|&(_, best)| v > best) {
                up = Some((t, v));
            }
            if movable_down && low.as_ref().is_none_or(|&(_, best)| v < best) {
                low = Some((t, v));
            }
        }
        let (Some((i, vi)), Some((_, vmin))) = (up, low) else {
            break (0.0, true);
        };
        if vi - vmin < tol::SVR_KKT_TOLERANCE {
            break ((vi + vmin) / 2.0, true);
        }
        if iterations >= tol::SVR_MAX_ITERATIONS {
            break ((vi + vmin) / 2.0, false);
        }
        iterations += 1;
        let mut pair: Option<(usize, f64, f64)> = None;
        for t in 0..2 * m {
            let v = -sign(t) * g[t];
            let movable_down = if sign(t) > 0.0 {
                z[t] > 0.0
            } else {
                z[t] < box_constraint
            };
            if !movable_down || v >= vi {
                continue;
            }
            let gain = (vi - v) * (vi - v) / curvature_of(i, t);
            if pair.as_ref().is_none_or(|&(_, _, best)| gain > best) {
                pair = Some((t, v, gain));
            }
        }
        let Some((j, vj, _)) = pair else {
            break ((vi + vmin) / 2.0, true);
        };
        let curvature = curvature_of(i, j);
        let mut lambda = (vi - vj) / curvature;
        lambda = lambda.min(if sign(i) > 0.0 {
            box_constraint - z[i]
        } else {
            z[i]
        });
        lambda = lambda.min(if sign(j) > 0.0 {
            z[j]
        } else {
            box_constraint - z[j]
        });
        if lambda <= 0.0 {
            break ((vi + vj) / 2.0, false);
        }
        let di = sign(i) * lambda;
        let dj = -sign(j) * lambda;
        z[i] += di;
        z[j] += dj;
        for t in 0..2 * m {
            let st = sign(t);
            g[t] += st * sign(i) * kval(t, i) * di + st * sign(j) * kval(t, j) * dj;
        }
    };
    if !converged {
        return Err(KernelError::NotConverged { iterations });
    }
    let beta = DVector::from_fn(m, |i, _| z[i] - z[i + m]);
    Ok(ModelInner::Svr {
        beta,
        bias,
        iterations,
    })
}

impl RegressorModel {
    pub fn kind(&self) -> RegressorKind {
        self.params.kind()
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn params(&self) -> &RegressorParams {
        &self.params
    }

    /// Jitter added to make the GP system factorizable, when any.
    pub fn jitter(&self) -> Option<f64> {
        match &self.inner {
            ModelInner::Gp { jitter, .. } => *jitter,
            _ => None,
        }
    }

    /// SVR dual coefficients beta_i = alpha_i - alpha*_i.
    pub fn dual_coefficients(&self) -> Option<&DVector<f64>> {
        match &self.inner {
            ModelInner::Svr { beta, .. } => Some(beta),
            _ => None,
        }
    }

    fn query_kernel(&self, query: &CorrelationMatrix) -> Result<DVector<f64>, KernelError> {
        if query.dim() != self.coords.matrix_dim() {
            return Err(KernelError::DimensionMismatch {
                query: query.dim(),
                train: self.coords.matrix_dim(),
            });
        }
        let q = geometry::to_coords(self.spec.geometry, query)?;
        Ok(DVector::from_fn(self.coords.len(), |i, _| {
            let d2 = (self.coords.point(i) - &q).norm_squared();
            self.spec.value(d2)
        }))
    }

    pub fn predict(&self, query: &CorrelationMatrix) -> Result<Prediction, KernelError> {
        let kq = self.query_kernel(query)?;
        match &self.inner {
            ModelInner::Gp { alpha, chol, .. } => {
                let value = kq.dot(alpha);
                let mut w = kq;
                // forward substitution: w <- L^-1 k_q
                let solved = chol
                    .solve_lower_triangular(&w)
                    .ok_or(GeometryError::CholeskyFailure)?;
                w = solved;
                let variance = (1.0 - w.norm_squared()).max(0.0);
                Ok(Prediction {
                    value,
                    variance: Some(variance),
                })
            }
            ModelInner::Kern => {
                let total: f64 = kq.iter().sum();
                if total <= 0.0 {
                    return Err(KernelError::NumericalUnderflow);
                }
                let value = kq
                    .iter()
                    .zip(&self.labels)
                    .map(|(w, y)| w / total * y)
                    .sum();
                Ok(Prediction {
                    value,
                    variance: None,
                })
            }
            ModelInner::Svr { beta, bias, .. } => Ok(Prediction {
                value: kq.dot(beta) + bias,
                variance: None,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub spec: KernelSpec,
    pub params: RegressorParams,
    pub cv_mse: f64,
}

/// Grid search by k-fold cross-validation; deterministic given the seed.
///
/// Grid points whose evaluation fails numerically (a bandwidth that
/// underflows every kernel weight, a Gram system past the jitter ceiling)
/// are excluded from the search; the failure is returned only when no grid
/// point survives.
pub fn tune(
    s: &SampleSet,
    theta_grid: &[f64],
    param_grid: &[RegressorParams],
    geometry: FlatGeometry,
    folds: usize,
    seed: u64,
) -> Result<TuneResult, KernelError> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    let m = s.len();
    if folds < 2 || m < folds {
        return Err(KernelError::InsufficientData { samples: m, folds });
    }
    if theta_grid.is_empty() || param_grid.is_empty() {
        return Err(KernelError::EmptyGrid);
    }
    s.labels().ok_or(KernelError::MissingLabels)?;
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let assignment: Vec<usize> = {
        let mut a = vec![0; m];
        for (pos, &idx) in order.iter().enumerate() {
            a[idx] = pos % folds;
        }
        a
    };

    let mut best: Option<(f64, f64, (f64, f64), TuneResult)> = None;
    let mut last_failure = None;
    for &theta in theta_grid {
        let spec = KernelSpec::new(theta, geometry)?;
        'point: for &params in param_grid {
            let mut squared_error = 0.0;
            let mut evaluated = 0usize;
            for fold in 0..folds {
                let train_idx: Vec<usize> =
                    (0..m).filter(|&i| assignment[i] != fold).collect();
                let test_idx: Vec<usize> = (0..m).filter(|&i| assignment[i] == fold).collect();
                if train_idx.is_empty() || test_idx.is_empty() {
                    continue;
                }
                let model = match fit(&s.subset(&train_idx), spec, params) {
                    Ok(model) => model,
                    Err(err) => {
                        last_failure = Some(err);
                        continue 'point;
                    }
                };
                for &i in &test_idx {
                    let pred = match model.predict(s.get(i)) {
                        Ok(pred) => pred,
                        Err(err) => {
                            last_failure = Some(err);
                            continue 'point;
                        }
                    };
                    let y = s.labels().expect("checked above")[i];
                    squared_error += (pred.value - y) * (pred.value - y);
                    evaluated += 1;
                }
            }
            let cv_mse = squared_error / evaluated as f64;
            let key = (cv_mse, theta, params.complexity());
            let better = match &best {
                None => true,
                Some((b_mse, b_theta, b_cplx, _)) => {
                    let current = (cv_mse, theta, key.2);
                    let incumbent = (*b_mse, *b_theta, *b_cplx);
                    lex_less(current, incumbent)
                }
            };
            if better {
                best = Some((
                    cv_mse,
                    theta,
                    key.2,
                    TuneResult {
                        spec,
                        params,
                        cv_mse,
                    },
                ));
            }
        }
    }
    match best {
        Some(found) => Ok(found.3),
        None => Err(last_failure.expect("nonempty grids either score or fail")),
    }
}

fn lex_less(a: (f64, f64, (f64, f64)), b: (f64, f64, (f64, f64))) -> bool {
    let order = a
        .0
        .total_cmp(&b.0)
        .then(a.1.total_cmp(&b.1))
        .then(a.2 .0.total_cmp(&b.2 .0))
        .then(a.2 .1.total_cmp(&b.2 .1));
    order.is_lt()
}
