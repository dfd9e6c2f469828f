//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};

/// Symmetric eigendecomposition with eigenvalues sorted ascending and the
/// eigenvector columns permuted to match.
pub(crate) fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let se = m.clone().symmetric_eigen();
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = DVector::from_fn(n, |i, _| se.eigenvalues[order[i]]);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Eigenvalues only, sorted ascending.
pub(crate) fn sym_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    let mut v = m.clone().symmetric_eigenvalues();
    v.as_mut_slice().sort_by(f64::total_cmp);
    v
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub(crate) fn cholesky_lower(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    nalgebra::Cholesky::new(m.clone()).map(|c| c.unpack())
}

/// Whether the smallest eigenvalue of symmetric `m` exceeds `shift`,
/// decided by attempting a Cholesky factorization of `m - shift*I`.
pub(crate) fn min_eigenvalue_exceeds(m: &DMatrix<f64>, shift: f64) -> bool {
    let n = m.nrows();
    let mut shifted = m.clone();
    for i in 0..n {
        shifted[(i, i)] -= shift;
    }
    nalgebra::Cholesky::new(shifted).is_some()
}

/// U f(Λ) U' for a symmetric matrix given entrywise spectral map `f`.
pub(crate) fn sym_matrix_function(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let (values, vectors) = sym_eigen(m);
    let mut scaled = vectors.clone();
    for j in 0..values.len() {
        let s = f(values[j]);
        scaled.column_mut(j).scale_mut(s);
    }
    let mut out = &scaled * vectors.transpose();
    symmetrize_mut(&mut out);
    out
}

/// Average a matrix with its transpose in place.
pub(crate) fn symmetrize_mut(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Product of two lower-triangular matrices whose nonzeros sit at least
/// `ka` (resp. `kb`) diagonals below the main diagonal. The result has its
/// nonzeros at least `ka + kb` diagonals down, which the loop bounds exploit;
/// entries above that band are left untouched (zero).
pub(crate) fn mul_lower_shifted(
    a: &DMatrix<f64>,
    ka: usize,
    b: &DMatrix<f64>,
    kb: usize,
) -> DMatrix<f64> {
    let n = a.nrows();
    let mut out = DMatrix::zeros(n, n);
    let shift = ka + kb;
    for j in 0..n.saturating_sub(shift) {
        for i in (j + shift)..n {
            let mut acc = 0.0;
            for k in (j + kb)..=(i - ka) {
                acc += a[(i, k)] * b[(k, j)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Pairwise (tree) summation; the tighter error bound keeps means stable
/// under sample reordering.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Column means of an m x d matrix using pairwise summation down each column.
pub(crate) fn column_means_pairwise(m: &DMatrix<f64>) -> DVector<f64> {
    let rows = m.nrows();
    let mut scratch = vec![0.0; rows];
    DVector::from_fn(m.ncols(), |j, _| {
        for (i, slot) in scratch.iter_mut().enumerate() {
            *slot = m[(i, j)];
        }
        pairwise_sum(&scratch) / rows as f64
    })
}

/// Median of a sample; averages the middle pair for even lengths.
pub(crate) fn median(xs: &mut [f64]) -> f64 {
    assert!(!xs.is_empty(), "median of empty slice");
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Sample mean and standard deviation (divisor n - 1; std is 0 for n < 2).
pub(crate) fn mean_and_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let mean = pairwise_sum(xs) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}
