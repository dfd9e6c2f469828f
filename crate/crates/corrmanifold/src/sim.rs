//! Synthetic correlation samples from Wishart families.
//!
//! Draws use the Bartlett decomposition: for scale V = L L' and dof v, the
//! scatter (L A)(L A)' with A lower-triangular, A_ii = sqrt(chi2(v - i)) and
//! subdiagonal standard normals, is Wishart(V, v). Each scatter is then
//! rescaled to unit diagonal, giving a random correlation matrix
//! concentrated around the correlation structure of V.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::linalg;
use crate::types::{CorrelationMatrix, SampleSet, ValidationError};

/// Autoregressive coupling used by the noise family unless overridden.
pub const DEFAULT_AR1_RHO: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("degrees of freedom {dof} below dimension {dim}")]
    BadDegreesOfFreedom { dof: f64, dim: usize },
    #[error("autoregressive coefficient {rho} outside (-1, 1)")]
    BadRho { rho: f64 },
    #[error("contamination {contamination} exceeds sample count {count}")]
    BadContamination { contamination: usize, count: usize },
    #[error("sample count must be positive")]
    EmptyCount,
    #[error("dimension must be at least 2, got {dim}")]
    BadDimension { dim: usize },
    #[error("degenerate draw: {0}")]
    DegenerateDraw(#[from] ValidationError),
}

/// Sampling families for synthetic data.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum Generator {
    /// Wishart draws around the identity correlation.
    WishartIdentity,
    /// Wishart draws around the AR(1) correlation rho^|i-j|.
    WishartAr1 { rho: f64 },
    /// `contamination` AR(1)-noise draws followed by identity-signal draws,
    /// labeled 1.0 and 0.0 respectively.
    Mixture { contamination: usize, rho: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SimulationSpec {
    pub generator: Generator,
    pub dim: usize,
    pub count: usize,
    /// Wishart degrees of freedom; defaults to 2 * dim.
    pub dof: Option<f64>,
    pub seed: u64,
}

/// The AR(1) correlation matrix with entries rho^|i-j|.
pub fn ar1_correlation(n: usize, rho: f64) -> Result<CorrelationMatrix, SimError> {
    if !(rho.abs() < 1.0) {
        return Err(SimError::BadRho { rho });
    }
    if n < 2 {
        return Err(SimError::BadDimension { dim: n });
    }
    let m = DMatrix::from_fn(n, n, |i, j| rho.powi((i as i32 - j as i32).abs()));
    Ok(CorrelationMatrix::new(m)?)
}

/// Wishart scatter matrix for scale V = scale_chol * scale_chol' and `dof`
/// degrees of freedom (dof >= p, possibly fractional).
pub fn wishart_scatter(
    scale_chol: &DMatrix<f64>,
    dof: f64,
    rng: &mut impl Rng,
) -> Result<DMatrix<f64>, SimError> {
    let p = scale_chol.nrows();
    if dof < p as f64 {
        return Err(SimError::BadDegreesOfFreedom { dof, dim: p });
    }
    let mut bartlett = DMatrix::zeros(p, p);
    for i in 0..p {
        let chi = ChiSquared::new(dof - i as f64).expect("dof - i > 0 by the dof >= p check");
        bartlett[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            bartlett[(i, j)] = StandardNormal.sample(rng);
        }
    }
    let factor = scale_chol * bartlett;
    Ok(&factor * factor.transpose())
}

/// One normalized Wishart draw: scatter rescaled to unit diagonal.
pub fn wishart_correlation(
    scale_chol: &DMatrix<f64>,
    dof: f64,
    rng: &mut impl Rng,
) -> Result<CorrelationMatrix, SimError> {
    let w = wishart_scatter(scale_chol, dof, rng)?;
    let p = w.nrows();
    let inv_sqrt: Vec<f64> = (0..p).map(|i| 1.0 / w[(i, i)].sqrt()).collect();
    let c = DMatrix::from_fn(p, p, |i, j| w[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
    Ok(CorrelationMatrix::new(c)?)
}

/// Generate `spec.count` samples; bit-reproducible for a fixed spec.
pub fn simulate(spec: &SimulationSpec) -> Result<SampleSet, SimError> {
    if spec.count == 0 {
        return Err(SimError::EmptyCount);
    }
    if spec.dim < 2 {
        return Err(SimError::BadDimension { dim: spec.dim });
    }
    let dof = spec.dof.unwrap_or(2.0 * spec.dim as f64);
    if dof < spec.dim as f64 {
        return Err(SimError::BadDegreesOfFreedom {
            dof,
            dim: spec.dim,
        });
    }
    let identity_chol = DMatrix::identity(spec.dim, spec.dim);
    let ar1_chol = |rho: f64| -> Result<DMatrix<f64>, SimError> {
        let c = ar1_correlation(spec.dim, rho)?;
        linalg::cholesky_lower(c.matrix()).ok_or(SimError::BadRho { rho })
    };

    let mut rng = rand::SeedableRng::seed_from_u64(spec.seed);
    let rng: &mut ChaCha8Rng = &mut rng;
    let mut items = Vec::with_capacity(spec.count);
    let mut labels = None;
    match spec.generator {
        Generator::WishartIdentity => {
            for _ in 0..spec.count {
                items.push(wishart_correlation(&identity_chol, dof, rng)?);
            }
        }
        Generator::WishartAr1 { rho } => {
            let chol = ar1_chol(rho)?;
            for _ in 0..spec.count {
                items.push(wishart_correlation(&chol, dof, rng)?);
            }
        }
        Generator::Mixture { contamination, rho } => {
            if contamination > spec.count {
                return Err(SimError::BadContamination {
                    contamination,
                    count: spec.count,
                });
            }
            let chol = ar1_chol(rho)?;
            for _ in 0..contamination {
                items.push(wishart_correlation(&chol, dof, rng)?);
            }
            for _ in contamination..spec.count {
                items.push(wishart_correlation(&identity_chol, dof, rng)?);
            }
            let mut flags = vec![1.0; contamination];
            flags.resize(spec.count, 0.0);
            labels = Some(flags);
        }
    }
    let ids = (0..spec.count).map(|i| format!("s{i:04}")).collect();
    let mut set = SampleSet::new(items)?.with_ids(ids)?;
    if let Some(flags) = labels {
        set = set.with_labels(flags)?;
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec(generator: Generator, seed: u64) -> SimulationSpec {
        SimulationSpec {
            generator,
            dim: 4,
            count: 6,
            dof: None,
            seed,
        }
    }

    #[test]
    fn ar1_entries() {
        let c = ar1_correlation(4, 0.9).unwrap();
        assert_abs_diff_eq!(c.matrix()[(0, 3)], 0.9_f64.powi(3), epsilon = 1e-15);
        assert_abs_diff_eq!(c.matrix()[(2, 1)], 0.9, epsilon = 1e-15);
        assert!(ar1_correlation(4, 1.0).is_err());
    }

    #[test]
    fn draws_are_reproducible() {
        let a = simulate(&spec(Generator::WishartIdentity, 7)).unwrap();
        let b = simulate(&spec(Generator::WishartIdentity, 7)).unwrap();
        let c = simulate(&spec(Generator::WishartIdentity, 8)).unwrap();
        for i in 0..a.len() {
            assert_eq!(a.get(i).matrix(), b.get(i).matrix());
        }
        assert_ne!(a.get(0).matrix(), c.get(0).matrix());
    }

    #[test]
    fn mixture_without_contamination_matches_identity_family() {
        let pure = simulate(&spec(Generator::WishartIdentity, 21)).unwrap();
        let mixed = simulate(&spec(
            Generator::Mixture {
                contamination: 0,
                rho: 0.9,
            },
            21,
        ))
        .unwrap();
        for i in 0..pure.len() {
            assert_eq!(pure.get(i).matrix(), mixed.get(i).matrix());
        }
        assert_eq!(mixed.labels().unwrap(), &[0.0; 6]);
    }

    #[test]
    fn mixture_orders_noise_first() {
        let s = simulate(&spec(
            Generator::Mixture {
                contamination: 2,
                rho: 0.9,
            },
            3,
        ))
        .unwrap();
        assert_eq!(s.labels().unwrap(), &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn dof_below_dimension_rejected() {
        let mut s = spec(Generator::WishartIdentity, 1);
        s.dof = Some(3.0);
        assert!(matches!(
            simulate(&s),
            Err(SimError::BadDegreesOfFreedom { .. })
        ));
    }

    #[test]
    fn normalized_draws_concentrate_around_scale() {
        // with dof >> p the normalized scatter hugs its scale correlation
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
        let scale = ar1_correlation(3, 0.6).unwrap();
        let chol = linalg::cholesky_lower(scale.matrix()).unwrap();
        let mut mean = DMatrix::zeros(3, 3);
        let reps = 400;
        for _ in 0..reps {
            mean += wishart_correlation(&chol, 4000.0, &mut rng)
                .unwrap()
                .into_matrix();
        }
        mean /= reps as f64;
        assert_abs_diff_eq!(mean[(0, 1)], 0.6, epsilon = 0.01);
        assert_abs_diff_eq!(mean[(0, 2)], 0.36, epsilon = 0.01);
    }
}
