//! Geometric statistics and learning on full-rank correlation matrices.
//!
//! A correlation matrix is a symmetric positive-definite matrix with unit
//! diagonal. The set of all such matrices of a fixed size (the open
//! elliptope) is a smooth manifold, and this crate equips it with metric
//! structures that make statistics and machine learning on collections of
//! correlation matrices both well defined and cheap:
//!
//! * **ECM** pulls the Euclidean metric back through the row-normalized
//!   Cholesky factor, so every matrix maps to a unit lower-triangular
//!   coordinate point.
//! * **LEC** additionally applies the triangular matrix logarithm, giving a
//!   strict lower-triangular (i.e. unconstrained linear) coordinate space.
//! * **AIRM** is the classical affine-invariant metric on symmetric
//!   positive-definite matrices, used here as the reference geometry.
//! * **QAM** quotients AIRM by positive diagonal scaling.
//!
//! Under ECM and LEC, distances, geodesics, means, medians, and kernel
//! methods reduce to flat operations in coordinates after a one-time
//! transformation per matrix; AIRM and QAM require iterative linear algebra
//! per evaluation and serve as accuracy baselines.
//!
//! The crate is organized around [`CorrelationMatrix`] plus [`SampleSet`]
//! collections, with modules for covariance/correlation estimation
//! ([`estimators`]), Fréchet means and medians ([`frechet`]), kernels and
//! nonparametric regression ([`kernel`]), dimension reduction ([`dimred`]),
//! clustering ([`clustering`]), two-sample testing ([`twosample`]),
//! synthetic data generation ([`sim`]), subject fingerprinting
//! ([`fingerprint`]), network binarization ([`binarize`]), and distance
//! timing harnesses ([`timing`]).

pub mod binarize;
pub mod clustering;
pub mod dimred;
pub mod estimators;
pub mod fingerprint;
pub mod frechet;
pub mod geometry;
pub mod kernel;
pub(crate) mod linalg;
pub mod sim;
pub mod timing;
pub mod tol;
pub mod twosample;
pub mod types;

pub use geometry::{FlatGeometry, GeometryKind, QamSettings};
pub use types::{
    CorrelationMatrix, SampleSet, SpdMatrix, StrictLowerTriangular, UnitLowerTriangular,
    ValidationError,
};
