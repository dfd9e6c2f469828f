//! Covariance and correlation estimation from multivariate time series.
//!
//! Four estimators: the sample covariance (which may be singular and says
//! so), Ledoit-Wolf and OAS shrinkage toward a scaled identity, and a ridge
//! offset. Shrinkage intensities follow the original sources (Ledoit & Wolf
//! 2004; Chen, Wiesel, Eldar & Hero 2010) with the empirical covariance on
//! divisor T inside the intensity formulas; the returned estimate applies
//! the intensity to the unbiased divisor T-1 sample covariance.

use nalgebra::DMatrix;

use crate::linalg;
use crate::tol;
use crate::types::{CorrelationMatrix, SpdMatrix, ValidationError};

pub const DEFAULT_RIDGE_TAU: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EstimatorError {
    #[error("need at least 2 observations, got {rows}")]
    TooFewObservations { rows: usize },
    #[error("need at least 2 channels, got {cols}")]
    TooFewChannels { cols: usize },
    #[error("non-finite value in time series")]
    NonFinite,
    #[error("column {column} is constant")]
    DegenerateInput { column: usize },
    #[error("sample covariance is singular (rank {rank} of {dim}); use a shrinkage estimator")]
    SingularResult { rank: usize, dim: usize },
    #[error("block count {blocks} not in 2..={channels}")]
    BadBlockCount { blocks: usize, channels: usize },
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

/// T observations (rows) of n channels (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesMatrix {
    values: DMatrix<f64>,
}

impl TimeSeriesMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self, EstimatorError> {
        if values.nrows() < 2 {
            return Err(EstimatorError::TooFewObservations {
                rows: values.nrows(),
            });
        }
        if values.ncols() < 2 {
            return Err(EstimatorError::TooFewChannels {
                cols: values.ncols(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EstimatorError::NonFinite);
        }
        for j in 0..values.ncols() {
            let col = values.column(j);
            let first = col[0];
            if col.iter().all(|&v| v == first) {
                return Err(EstimatorError::DegenerateInput { column: j });
            }
        }
        Ok(Self { values })
    }

    pub fn observations(&self) -> usize {
        self.values.nrows()
    }

    pub fn channels(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
#[serde(rename_all = "snake_case", tag = "estimator")]
pub enum EstimatorKind {
    Sample,
    LedoitWolf,
    Oas,
    Ridge { tau: f64 },
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Sample => "scm",
            EstimatorKind::LedoitWolf => "lw",
            EstimatorKind::Oas => "oas",
            EstimatorKind::Ridge { .. } => "ridge",
        }
    }
}

/// Sample covariance with its definiteness recorded rather than enforced.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEstimate {
    pub matrix: DMatrix<f64>,
    pub full_rank: bool,
}

fn centered(x: &TimeSeriesMatrix) -> DMatrix<f64> {
    let means = linalg::column_means_pairwise(x.values());
    let mut c = x.values().clone();
    for j in 0..c.ncols() {
        let m = means[j];
        for i in 0..c.nrows() {
            c[(i, j)] -= m;
        }
    }
    c
}

/// Mean-centered sample covariance, divisor T-1. May be singular; the flag
/// reports whether the smallest eigenvalue clears the definiteness tolerance.
pub fn sample_covariance(x: &TimeSeriesMatrix) -> SymmetricEstimate {
    let c = centered(x);
    let mut s = c.tr_mul(&c) / (x.observations() as f64 - 1.0);
    linalg::symmetrize_mut(&mut s);
    let full_rank = linalg::min_eigenvalue_exceeds(&s, tol::TOL_POSITIVE_DEFINITE);
    SymmetricEstimate {
        matrix: s,
        full_rank,
    }
}

/// Ledoit-Wolf shrinkage intensity toward (tr/n) I, clamped to [0,1].
pub fn ledoit_wolf_intensity(x: &TimeSeriesMatrix) -> f64 {
    let c = centered(x);
    let (t, n) = (x.observations() as f64, x.channels() as f64);
    let emp = c.tr_mul(&c) / t;
    let mu = emp.trace() / n;
    let emp_sq_sum: f64 = emp.iter().map(|v| v * v).sum();
    let delta = emp_sq_sum / n - 2.0 * mu * emp.trace() / n + mu * mu;
    if delta <= 0.0 {
        return 0.0;
    }
    let sq = c.map(|v| v * v);
    let beta_raw = (sq.tr_mul(&sq).sum() / t - emp_sq_sum) / (n * t);
    (beta_raw.min(delta) / delta).clamp(0.0, 1.0)
}

/// Oracle approximating shrinkage intensity (Chen et al. 2010), clamped.
pub fn oas_intensity(x: &TimeSeriesMatrix) -> f64 {
    let c = centered(x);
    let (t, n) = (x.observations() as f64, x.channels() as f64);
    let emp = c.tr_mul(&c) / t;
    let tr = emp.trace();
    let tr_sq: f64 = emp.iter().map(|v| v * v).sum();
    let num = (1.0 - 2.0 / n) * tr_sq + tr * tr;
    let den = (t + 1.0 - 2.0 / n) * (tr_sq - tr * tr / n);
    if den <= 0.0 {
        return 1.0;
    }
    (num / den).clamp(0.0, 1.0)
}

fn shrink_toward_identity(s: &SymmetricEstimate, intensity: f64) -> DMatrix<f64> {
    let n = s.matrix.nrows();
    let mu = s.matrix.trace() / n as f64;
    let mut out = &s.matrix * (1.0 - intensity);
    for i in 0..n {
        out[(i, i)] += intensity * mu;
    }
    out
}

fn rank_of(s: &DMatrix<f64>) -> usize {
    linalg::sym_eigenvalues(s)
        .iter()
        .filter(|&&v| v > tol::TOL_POSITIVE_DEFINITE)
        .count()
}

fn definite(matrix: DMatrix<f64>) -> Result<SpdMatrix, EstimatorError> {
    if linalg::min_eigenvalue_exceeds(&matrix, tol::TOL_POSITIVE_DEFINITE) {
        Ok(SpdMatrix::from_valid(matrix))
    } else {
        Err(EstimatorError::SingularResult {
            rank: rank_of(&matrix),
            dim: matrix.nrows(),
        })
    }
}

pub fn estimate_covariance(
    x: &TimeSeriesMatrix,
    kind: EstimatorKind,
) -> Result<SpdMatrix, EstimatorError> {
    let s = sample_covariance(x);
    match kind {
        EstimatorKind::Sample => {
            if !s.full_rank {
                return Err(EstimatorError::SingularResult {
                    rank: rank_of(&s.matrix),
                    dim: s.matrix.nrows(),
                });
            }
            Ok(SpdMatrix::from_valid(s.matrix))
        }
        EstimatorKind::LedoitWolf => definite(shrink_toward_identity(&s, ledoit_wolf_intensity(x))),
        EstimatorKind::Oas => definite(shrink_toward_identity(&s, oas_intensity(x))),
        EstimatorKind::Ridge { tau } => {
            let mut m = s.matrix;
            for i in 0..m.nrows() {
                m[(i, i)] += tau;
            }
            definite(m)
        }
    }
}

/// D^(-1/2) S D^(-1/2) with D = Diag(S); diagonal is exactly one.
pub fn cov_to_corr(s: &SpdMatrix) -> Result<CorrelationMatrix, ValidationError> {
    let m = s.matrix();
    let n = m.nrows();
    let inv_sqrt: Vec<f64> = (0..n).map(|i| 1.0 / m[(i, i)].sqrt()).collect();
    let c = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            m[(i, j)] * inv_sqrt[i] * inv_sqrt[j]
        }
    });
    CorrelationMatrix::new(c)
}

pub fn estimate_correlation(
    x: &TimeSeriesMatrix,
    kind: EstimatorKind,
) -> Result<CorrelationMatrix, EstimatorError> {
    let s = estimate_covariance(x, kind)?;
    Ok(cov_to_corr(&s)?)
}

/// Summarize contiguous channel blocks by their first principal component.
///
/// Channels are split into `blocks` contiguous groups (sizes differing by at
/// most one). Each group is centered and replaced by its leading principal
/// component scores, sign-fixed so the loading vector has nonnegative sum.
pub fn reduce_blocks(
    x: &TimeSeriesMatrix,
    blocks: usize,
) -> Result<TimeSeriesMatrix, EstimatorError> {
    let n = x.channels();
    if blocks < 2 || blocks > n {
        return Err(EstimatorError::BadBlockCount {
            blocks,
            channels: n,
        });
    }
    let c = centered(x);
    let base = n / blocks;
    let extra = n % blocks;
    let mut out = DMatrix::zeros(x.observations(), blocks);
    let mut start = 0;
    for b in 0..blocks {
        let width = base + usize::from(b < extra);
        let block = c.columns(start, width).into_owned();
        let cov = block.tr_mul(&block);
        let (_, vectors) = linalg::sym_eigen(&cov);
        let mut leading = vectors.column(width - 1).into_owned();
        if leading.sum() < 0.0 {
            leading.neg_mut();
        }
        out.set_column(b, &(&block * &leading));
        start += width;
    }
    TimeSeriesMatrix::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    use crate::sim;

    fn gaussian_rows(t: usize, chol: &DMatrix<f64>, seed: u64) -> TimeSeriesMatrix {
        let n = chol.nrows();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = DMatrix::zeros(t, n);
        for i in 0..t {
            let z = nalgebra::DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
            let row = chol * z;
            for j in 0..n {
                x[(i, j)] = row[j];
            }
        }
        TimeSeriesMatrix::new(x).unwrap()
    }

    fn white_noise(t: usize, n: usize, seed: u64) -> TimeSeriesMatrix {
        gaussian_rows(t, &DMatrix::identity(n, n), seed)
    }

    #[test]
    fn constant_column_rejected() {
        let mut m = DMatrix::from_element(10, 3, 1.0);
        m.set_column(0, &nalgebra::DVector::from_fn(10, |i, _| i as f64));
        m.set_column(2, &nalgebra::DVector::from_fn(10, |i, _| (i * i) as f64));
        assert!(matches!(
            TimeSeriesMatrix::new(m),
            Err(EstimatorError::DegenerateInput { column: 1 })
        ));
    }

    #[test]
    fn ridge_adds_tau_to_sample_covariance() {
        let x = white_noise(40, 5, 11);
        let plain = sample_covariance(&x).matrix;
        let ridge = estimate_covariance(&x, EstimatorKind::Ridge { tau: 1.0 }).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let expect = plain[(i, j)] + f64::from(u8::from(i == j));
                assert_eq!(ridge.matrix()[(i, j)], expect);
            }
        }
    }

    #[test]
    fn shrinkage_near_identity_truth_hugs_the_target() {
        // the target (tr/n)I coincides with the truth here, so the oracle
        // intensities run high while the estimate stays close to I
        let x = white_noise(4000, 10, 2);
        let lw = ledoit_wolf_intensity(&x);
        let oas = oas_intensity(&x);
        // frozen from independent evaluations of the published formulas
        // (scikit-learn's ledoit_wolf_shrinkage; Chen et al. 2010 in numpy)
        assert_abs_diff_eq!(lw, 0.6538940178253916, epsilon = 1e-11);
        assert_abs_diff_eq!(oas, 0.644230970166895, epsilon = 1e-11);
        for kind in [EstimatorKind::LedoitWolf, EstimatorKind::Oas] {
            let est = estimate_covariance(&x, kind).unwrap();
            let err = (est.matrix() - DMatrix::identity(10, 10)).norm();
            assert!(err < 0.1, "{} error {err}", kind.name());
        }
    }

    #[test]
    fn shrinkage_stays_small_when_truth_is_far_from_target() {
        let v = sim::ar1_correlation(6, 0.8).unwrap();
        let chol = crate::linalg::cholesky_lower(v.matrix()).unwrap();
        let x = gaussian_rows(4000, &chol, 12);
        assert!(ledoit_wolf_intensity(&x) < 0.05);
        assert!(oas_intensity(&x) < 0.05);
    }

    #[test]
    fn undersampled_scm_is_singular() {
        let x = white_noise(50, 300, 3);
        match estimate_covariance(&x, EstimatorKind::Sample) {
            Err(EstimatorError::SingularResult { rank, dim }) => {
                assert_eq!(dim, 300);
                assert!(rank <= 49, "rank {rank}");
            }
            other => panic!("expected SingularResult, got {other:?}"),
        }
        assert!(!sample_covariance(&x).full_rank);
    }

    #[test]
    fn duplicated_column_scm_is_singular() {
        let mut x = white_noise(100, 4, 4).values().clone();
        let dup = x.column(0).into_owned();
        x.set_column(3, &dup);
        let x = TimeSeriesMatrix::new(x).unwrap();
        assert!(matches!(
            estimate_correlation(&x, EstimatorKind::Sample),
            Err(EstimatorError::SingularResult { .. })
        ));
    }

    #[test]
    fn shrinkage_definite_when_underdetermined() {
        let x = white_noise(3, 40, 5);
        for kind in [
            EstimatorKind::LedoitWolf,
            EstimatorKind::Oas,
            EstimatorKind::Ridge { tau: 1.0 },
        ] {
            let est = estimate_covariance(&x, kind);
            assert!(est.is_ok(), "{} failed: {est:?}", kind.name());
        }
    }

    #[test]
    fn cov_to_corr_closed_forms() {
        let s = SpdMatrix::new(DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 4.0])).unwrap();
        let c = cov_to_corr(&s).unwrap();
        assert_abs_diff_eq!(c.matrix()[(0, 1)], 0.5, epsilon = 1e-15);
        assert_eq!(c.matrix()[(0, 0)], 1.0);

        let d = SpdMatrix::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            3.0, 0.5, 7.0,
        ])))
        .unwrap();
        assert_eq!(cov_to_corr(&d).unwrap().matrix(), &DMatrix::identity(3, 3));
    }

    #[test]
    fn cov_to_corr_ignores_diagonal_rescaling() {
        let x = white_noise(60, 4, 6);
        let s = estimate_covariance(&x, EstimatorKind::LedoitWolf).unwrap();
        let scales = [2.0, 0.1, 5.0, 0.7];
        let scaled = DMatrix::from_fn(4, 4, |i, j| s.matrix()[(i, j)] * scales[i] * scales[j]);
        let scaled = SpdMatrix::new(scaled).unwrap();
        let a = cov_to_corr(&s).unwrap();
        let b = cov_to_corr(&scaled).unwrap();
        assert!((a.matrix() - b.matrix()).norm() < 1e-12);
    }

    #[test]
    fn estimators_recover_ar1_coupling() {
        let v = sim::ar1_correlation(4, 0.9).unwrap();
        let chol = crate::linalg::cholesky_lower(v.matrix()).unwrap();
        let x = gaussian_rows(5000, &chol, 7);
        for kind in [
            EstimatorKind::Sample,
            EstimatorKind::LedoitWolf,
            EstimatorKind::Oas,
            EstimatorKind::Ridge { tau: 0.01 },
        ] {
            let c = estimate_correlation(&x, kind).unwrap();
            assert_abs_diff_eq!(c.matrix()[(0, 1)], 0.9, epsilon = 0.05);
        }
    }

    #[test]
    fn white_noise_correlation_is_near_identity() {
        let x = white_noise(1000, 10, 8);
        for kind in [
            EstimatorKind::Sample,
            EstimatorKind::LedoitWolf,
            EstimatorKind::Oas,
            EstimatorKind::Ridge {
                tau: DEFAULT_RIDGE_TAU,
            },
        ] {
            let c = estimate_correlation(&x, kind).unwrap();
            let max_off = (0..10)
                .flat_map(|i| (0..i).map(move |j| (i, j)))
                .map(|(i, j)| c.matrix()[(i, j)].abs())
                .fold(0.0_f64, f64::max);
            assert!(max_off < 0.2, "{}: {max_off}", kind.name());
        }
    }

    #[test]
    fn error_shrinks_with_sample_size() {
        let v = sim::ar1_correlation(8, 0.6).unwrap();
        let chol = crate::linalg::cholesky_lower(v.matrix()).unwrap();
        let mut errors = Vec::new();
        for (t, seed) in [(8, 41), (80, 42), (640, 43)] {
            let x = gaussian_rows(t, &chol, seed);
            let c = estimate_correlation(&x, EstimatorKind::LedoitWolf).unwrap();
            errors.push((c.matrix() - v.matrix()).norm());
        }
        assert!(
            errors[0] > errors[1] && errors[1] > errors[2],
            "errors {errors:?}"
        );
    }

    #[test]
    fn block_reduction_tracks_shared_signals() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = 400;
        let mut common = DMatrix::zeros(t, 2);
        for v in common.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let mut x = DMatrix::zeros(t, 6);
        for j in 0..6 {
            let block = j / 3;
            for i in 0..t {
                let noise: f64 = StandardNormal.sample(&mut rng);
                x[(i, j)] = common[(i, block)] + 0.1 * noise;
            }
        }
        let reduced = reduce_blocks(&TimeSeriesMatrix::new(x).unwrap(), 2).unwrap();
        assert_eq!(reduced.channels(), 2);
        assert_eq!(reduced.observations(), t);
        let c = estimate_correlation(&reduced, EstimatorKind::Sample).unwrap();
        // the two block scores track independent signals
        assert!(c.matrix()[(0, 1)].abs() < 0.2);
        // each score follows its block's common signal up to the fixed sign
        let score = reduced.values().column(0).into_owned();
        let sig = common.column(0).into_owned();
        let r = score.dot(&sig) / (score.norm() * sig.norm());
        assert!(r.abs() > 0.99, "alignment {r}");
    }

    #[test]
    fn block_count_bounds() {
        let x = white_noise(20, 5, 10);
        assert!(reduce_blocks(&x, 1).is_err());
        assert!(reduce_blocks(&x, 6).is_err());
        assert!(reduce_blocks(&x, 5).is_ok());
    }
}
