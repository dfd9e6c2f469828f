//! Central numerical tolerances.
//!
//! Every threshold that decides validity, convergence, or tie handling lives
//! here so the values are pinned in one place and tests can reference the
//! same constants as the implementation.

/// A symmetric matrix is accepted as positive definite when its smallest
/// eigenvalue exceeds this bound (checked via a shifted Cholesky).
pub const TOL_POSITIVE_DEFINITE: f64 = 1e-10;

/// Diagonal entries of a correlation matrix may deviate from 1 by at most
/// this much before validation fails; within the bound they are rescaled to
/// exactly 1.
pub const TOL_UNIT_DIAGONAL: f64 = 1e-12;

/// Maximum tolerated absolute asymmetry |a_ij - a_ji|. Inputs within the
/// bound are symmetrized as (A + A')/2; beyond it validation fails.
pub const TOL_SYMMETRY: f64 = 1e-8;

/// Squared-exponential Gram matrices are positive semidefinite up to
/// round-off; eigenvalues above this floor are accepted.
pub const GRAM_EIGENVALUE_FLOOR: f64 = -1e-8;

/// Convergence threshold on the Frobenius norm of the mean update tangent in
/// the Karcher mean fixed-point iteration.
pub const KARCHER_TOLERANCE: f64 = 1e-8;

/// Iteration cap for the Karcher mean fixed-point iteration.
pub const KARCHER_MAX_ITERATIONS: usize = 100;

/// Default movement threshold for geometric-median iterations.
pub const WEISZFELD_TOLERANCE: f64 = 1e-9;

/// Default iteration cap for geometric-median iterations.
pub const WEISZFELD_MAX_ITERATIONS: usize = 500;

/// Iterates closer than this to a data point trigger the subgradient
/// (anchor) correction inside Weiszfeld iterations.
pub const WEISZFELD_ANCHOR_RADIUS: f64 = 1e-12;

/// Singular values at or below this threshold count as zero when ranking the
/// centered coordinate matrix (collinearity and rank checks).
pub const RANK_SINGULAR_VALUE_TOL: f64 = 1e-10;

/// Default gradient-norm stopping tolerance for the quotient-metric scaling
/// optimization.
pub const QAM_GRADIENT_TOLERANCE: f64 = 1e-8;

/// Default iteration cap for the quotient-metric scaling optimization.
pub const QAM_MAX_ITERATIONS: usize = 200;

/// Quotient-metric distances are refused above this dimension; per-pair
/// optimization cost grows too fast to be useful beyond it.
pub const QAM_DIMENSION_CAP: usize = 100;

/// Finite-difference step for the quotient-metric gradient cross-check.
pub const QAM_FD_STEP: f64 = 1e-6;

/// Initial jitter added to a Gram system when its Cholesky fails.
pub const GP_JITTER_INITIAL: f64 = 1e-10;

/// Jitter escalation stops at this value; beyond it the system is reported
/// singular.
pub const GP_JITTER_MAX: f64 = 1e-6;

/// Maximal-violation stopping threshold for the support-vector dual ascent.
pub const SVR_KKT_TOLERANCE: f64 = 1e-6;

/// Iteration cap for the support-vector dual ascent. Each step is O(m), so
/// the cap is generous: a wide box with a near-flat kernel drifts the bias
/// slowly and can need several hundred thousand steps to reach the KKT
/// tolerance.
pub const SVR_MAX_ITERATIONS: usize = 1_000_000;

/// Absolute stress-decrease threshold that stops majorization-based MDS.
pub const MMDS_STRESS_TOLERANCE: f64 = 1e-9;

/// Iteration cap for majorization-based MDS.
pub const MMDS_MAX_ITERATIONS: usize = 500;

/// Entropy tolerance for the per-point bandwidth bisection in t-SNE.
pub const TSNE_ENTROPY_TOLERANCE: f64 = 1e-5;

/// Relative loss-improvement threshold that stops autoencoder training.
pub const AE_RELATIVE_IMPROVEMENT: f64 = 1e-6;
