//! Validated matrix types and sample collections.
//!
//! Constructors are the only way to obtain these types with invalid content
//! ruled out: downstream code relies on `CorrelationMatrix` being symmetric
//! positive definite with an exact unit diagonal, and on the triangular
//! wrappers having exact zeros (and exact ones, where applicable) in their
//! structural entries.

use nalgebra::DMatrix;

use crate::linalg;
use crate::tol;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValidationError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("dimension must be at least 2, got {dim}")]
    TooSmall { dim: usize },
    #[error("matrix is not symmetric: max |a_ij - a_ji| = {max_asymmetry:.3e}")]
    NotSymmetric { max_asymmetry: f64 },
    #[error("diagonal entry {index} is {value} which violates the unit-diagonal tolerance")]
    NotUnitDiagonal { index: usize, value: f64 },
    #[error("matrix is not positive definite within tolerance {tolerance:.1e}")]
    NotPositiveDefinite { tolerance: f64 },
    #[error("entry ({row},{col}) = {value} violates the required triangular structure")]
    NotTriangular { row: usize, col: usize, value: f64 },
    #[error("sample set is empty")]
    EmptySample,
    #[error("sample dimensions differ: expected {expected}, found {found}")]
    MixedDimensions { expected: usize, found: usize },
    #[error("{what} length {got} does not match sample count {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("duplicate id {id:?}")]
    DuplicateId { id: String },
    #[error("label at index {index} is not finite")]
    NonFiniteLabel { index: usize },
}

fn check_square_finite(m: &DMatrix<f64>) -> Result<usize, ValidationError> {
    if m.nrows() != m.ncols() {
        return Err(ValidationError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(ValidationError::NonFinite);
    }
    if m.nrows() < 2 {
        return Err(ValidationError::TooSmall { dim: m.nrows() });
    }
    Ok(m.nrows())
}

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Symmetric positive-definite matrix with exact unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    m: DMatrix<f64>,
}

impl CorrelationMatrix {
    /// Validate with the default tolerances.
    pub fn new(m: DMatrix<f64>) -> Result<Self, ValidationError> {
        Self::with_tolerances(m, tol::TOL_POSITIVE_DEFINITE, tol::TOL_UNIT_DIAGONAL)
    }

    /// Validate with explicit positive-definiteness and diagonal tolerances.
    ///
    /// Inputs asymmetric by at most the symmetry tolerance are replaced by
    /// (A + A')/2; diagonals within `tol_diag` of 1 are rescaled to exactly 1
    /// by the congruence D^{-1/2} A D^{-1/2}.
    pub fn with_tolerances(
        mut m: DMatrix<f64>,
        tol_pd: f64,
        tol_diag: f64,
    ) -> Result<Self, ValidationError> {
        let n = check_square_finite(&m)?;
        let asym = max_asymmetry(&m);
        if asym > tol::TOL_SYMMETRY {
            return Err(ValidationError::NotSymmetric {
                max_asymmetry: asym,
            });
        }
        linalg::symmetrize_mut(&mut m);
        for i in 0..n {
            let d = m[(i, i)];
            if (d - 1.0).abs() > tol_diag {
                return Err(ValidationError::NotUnitDiagonal { index: i, value: d });
            }
        }
        // Congruence rescale: preserves positive definiteness exactly.
        let scale: Vec<f64> = (0..n).map(|i| 1.0 / m[(i, i)].sqrt()).collect();
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] *= scale[i] * scale[j];
            }
        }
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        if !linalg::min_eigenvalue_exceeds(&m, tol_pd) {
            return Err(ValidationError::NotPositiveDefinite { tolerance: tol_pd });
        }
        Ok(Self { m })
    }

    /// Wrap a matrix that is valid by construction (symmetric, unit diagonal,
    /// positive definite). Enforces exact structural symmetry and diagonal.
    pub(crate) fn from_valid(mut m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        linalg::symmetrize_mut(&mut m);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        Self { m }
    }

    /// The identity correlation matrix.
    pub fn identity(n: usize) -> Self {
        assert!(n >= 2, "correlation matrices need dimension at least 2");
        Self {
            m: DMatrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }
}

/// Symmetric positive-definite matrix (no diagonal constraint).
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    m: DMatrix<f64>,
}

impl SpdMatrix {
    pub fn new(mut m: DMatrix<f64>) -> Result<Self, ValidationError> {
        check_square_finite(&m)?;
        let asym = max_asymmetry(&m);
        if asym > tol::TOL_SYMMETRY {
            return Err(ValidationError::NotSymmetric {
                max_asymmetry: asym,
            });
        }
        linalg::symmetrize_mut(&mut m);
        if !linalg::min_eigenvalue_exceeds(&m, tol::TOL_POSITIVE_DEFINITE) {
            return Err(ValidationError::NotPositiveDefinite {
                tolerance: tol::TOL_POSITIVE_DEFINITE,
            });
        }
        Ok(Self { m })
    }

    pub(crate) fn from_valid(mut m: DMatrix<f64>) -> Self {
        linalg::symmetrize_mut(&mut m);
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }
}

/// Lower-triangular matrix with exact unit diagonal and exact zeros above it.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitLowerTriangular {
    m: DMatrix<f64>,
}

impl UnitLowerTriangular {
    pub fn new(m: DMatrix<f64>) -> Result<Self, ValidationError> {
        let n = check_square_finite(&m)?;
        for i in 0..n {
            for j in (i + 1)..n {
                if m[(i, j)] != 0.0 {
                    return Err(ValidationError::NotTriangular {
                        row: i,
                        col: j,
                        value: m[(i, j)],
                    });
                }
            }
            if m[(i, i)] != 1.0 {
                return Err(ValidationError::NotUnitDiagonal {
                    index: i,
                    value: m[(i, i)],
                });
            }
        }
        Ok(Self { m })
    }

    pub(crate) fn from_valid(m: DMatrix<f64>) -> Self {
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }
}

/// Lower-triangular matrix with exact zeros on and above the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct StrictLowerTriangular {
    m: DMatrix<f64>,
}

impl StrictLowerTriangular {
    pub fn new(m: DMatrix<f64>) -> Result<Self, ValidationError> {
        let n = check_square_finite(&m)?;
        for i in 0..n {
            for j in i..n {
                if m[(i, j)] != 0.0 {
                    return Err(ValidationError::NotTriangular {
                        row: i,
                        col: j,
                        value: m[(i, j)],
                    });
                }
            }
        }
        Ok(Self { m })
    }

    pub(crate) fn from_valid(m: DMatrix<f64>) -> Self {
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }
}

/// An ordered collection of correlation matrices of a common dimension,
/// optionally carrying per-item string ids and scalar labels.
#[derive(Debug, Clone)]
pub struct SampleSet {
    items: Vec<CorrelationMatrix>,
    ids: Option<Vec<String>>,
    labels: Option<Vec<f64>>,
}

impl SampleSet {
    pub fn new(items: Vec<CorrelationMatrix>) -> Result<Self, ValidationError> {
        let first = items.first().ok_or(ValidationError::EmptySample)?;
        let dim = first.dim();
        for item in &items {
            if item.dim() != dim {
                return Err(ValidationError::MixedDimensions {
                    expected: dim,
                    found: item.dim(),
                });
            }
        }
        Ok(Self {
            items,
            ids: None,
            labels: None,
        })
    }

    pub fn with_ids(mut self, ids: Vec<String>) -> Result<Self, ValidationError> {
        if ids.len() != self.items.len() {
            return Err(ValidationError::LengthMismatch {
                what: "id",
                got: ids.len(),
                expected: self.items.len(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(ValidationError::DuplicateId { id: id.clone() });
            }
        }
        self.ids = Some(ids);
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<f64>) -> Result<Self, ValidationError> {
        if labels.len() != self.items.len() {
            return Err(ValidationError::LengthMismatch {
                what: "label",
                got: labels.len(),
                expected: self.items.len(),
            });
        }
        if let Some(index) = labels.iter().position(|l| !l.is_finite()) {
            return Err(ValidationError::NonFiniteLabel { index });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.items[0].dim()
    }

    pub fn items(&self) -> &[CorrelationMatrix] {
        &self.items
    }

    pub fn get(&self, i: usize) -> &CorrelationMatrix {
        &self.items[i]
    }

    pub fn ids(&self) -> Option<&[String]> {
        self.ids.as_deref()
    }

    pub fn labels(&self) -> Option<&[f64]> {
        self.labels.as_deref()
    }

    /// New set holding clones of the selected items (ids and labels follow).
    ///
    /// Panics if `indices` is empty or out of bounds; callers slice by
    /// construction (folds, permutation groups).
    pub fn subset(&self, indices: &[usize]) -> Self {
        assert!(!indices.is_empty(), "subset of no indices");
        Self {
            items: indices.iter().map(|&i| self.items[i].clone()).collect(),
            ids: self
                .ids
                .as_ref()
                .map(|ids| indices.iter().map(|&i| ids[i].clone()).collect()),
            labels: self
                .labels
                .as_ref()
                .map(|ls| indices.iter().map(|&i| ls[i]).collect()),
        }
    }
}
