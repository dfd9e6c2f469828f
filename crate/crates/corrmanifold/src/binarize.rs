//! Thresholding a correlation matrix into an unweighted network by keeping
//! the strongest fraction of connections by absolute magnitude.

use nalgebra::DMatrix;

use crate::types::CorrelationMatrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BinarizeError {
    #[error("retained fraction {q} must lie strictly between 0 and 1")]
    BadFraction { q: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinarizedNetwork {
    /// Symmetric 0/1 adjacency with a zero diagonal.
    pub adjacency: DMatrix<f64>,
    /// Edges actually retained (upper-triangle count).
    pub retained: usize,
    /// The cutoff magnitude was shared by more candidates than slots;
    /// row-major index order decided.
    pub tie_at_threshold: bool,
}

/// Keeps the ceil(q * n(n-1)/2) largest off-diagonal entries by absolute
/// value. Zero entries are never promoted to edges, so sparser inputs may
/// retain fewer edges than the quota.
pub fn binarize_top_q(c: &CorrelationMatrix, q: f64) -> Result<BinarizedNetwork, BinarizeError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(BinarizeError::BadFraction { q });
    }
    let n = c.dim();
    let values = c.matrix();
    let pairs = n * (n - 1) / 2;
    let quota = (q * pairs as f64).ceil() as usize;
    // row-major upper triangle; stable sort preserves that order among ties
    let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(pairs);
    for i in 0..n {
        for j in i + 1..n {
            edges.push((i, j, values[(i, j)].abs()));
        }
    }
    edges.sort_by(|a, b| b.2.total_cmp(&a.2));
    let mut adjacency = DMatrix::zeros(n, n);
    let mut retained = 0;
    for &(i, j, magnitude) in edges.iter().take(quota) {
        if magnitude == 0.0 {
            break;
        }
        adjacency[(i, j)] = 1.0;
        adjacency[(j, i)] = 1.0;
        retained += 1;
    }
    let tie_at_threshold = retained == quota
        && quota < edges.len()
        && edges[quota].2 == edges[quota - 1].2
        && edges[quota].2 > 0.0;
    Ok(BinarizedNetwork {
        adjacency,
        retained,
        tie_at_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn corr(entries: &[&[f64]]) -> CorrelationMatrix {
        let n = entries.len();
        let m = DMatrix::from_fn(n, n, |i, j| entries[i][j]);
        CorrelationMatrix::new(m).unwrap()
    }

    #[test]
    fn keeps_only_the_strongest_edge() {
        let c = corr(&[
            &[1.0, 0.1, -0.6],
            &[0.1, 1.0, 0.3],
            &[-0.6, 0.3, 1.0],
        ]);
        // quota of ceil(0.2 * 3) = 1 edge
        let network = binarize_top_q(&c, 0.2).unwrap();
        assert_eq!(network.retained, 1);
        assert_eq!(network.adjacency[(0, 2)], 1.0);
        assert_eq!(network.adjacency[(2, 0)], 1.0);
        assert_eq!(network.adjacency.sum(), 2.0);
        assert!(!network.tie_at_threshold);
    }

    #[test]
    fn identity_has_no_edges_to_keep() {
        let c = CorrelationMatrix::identity(5);
        let network = binarize_top_q(&c, 0.5).unwrap();
        assert_eq!(network.retained, 0);
        assert_eq!(network.adjacency.sum(), 0.0);
    }

    #[test]
    fn quota_counts_upper_triangle_entries() {
        // dense random-ish correlation built from a diagonally dominant gram
        let n = 10;
        let mut rng_state = 12345u64;
        let mut next = move || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((rng_state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        let b = DMatrix::from_fn(n, n, |_, _| next());
        let gram = &b * b.transpose() + DMatrix::identity(n, n) * n as f64;
        let spd = crate::types::SpdMatrix::new(gram).unwrap();
        let c = crate::estimators::cov_to_corr(&spd).unwrap();
        let network = binarize_top_q(&c, 0.2).unwrap();
        assert_eq!(network.retained, 9, "ceil(0.2 * 45)");
        let mut upper_ones = 0;
        for i in 0..n {
            assert_eq!(network.adjacency[(i, i)], 0.0);
            for j in i + 1..n {
                assert_eq!(network.adjacency[(i, j)], network.adjacency[(j, i)]);
                if network.adjacency[(i, j)] == 1.0 {
                    upper_ones += 1;
                }
            }
        }
        assert_eq!(upper_ones, 9);
    }

    #[test]
    fn boundary_ties_resolve_in_row_major_order() {
        // every off-diagonal magnitude equal: the quota takes the earliest
        // row-major entries and reports the tie
        let r = 0.3;
        let c = corr(&[
            &[1.0, r, r, r],
            &[r, 1.0, r, r],
            &[r, r, 1.0, r],
            &[r, r, r, 1.0],
        ]);
        let network = binarize_top_q(&c, 0.3).unwrap();
        assert_eq!(network.retained, 2, "ceil(0.3 * 6)");
        assert!(network.tie_at_threshold);
        assert_eq!(network.adjacency[(0, 1)], 1.0);
        assert_eq!(network.adjacency[(0, 2)], 1.0);
        assert_eq!(network.adjacency[(0, 3)], 0.0);
    }

    #[test]
    fn fraction_bounds_are_enforced() {
        let c = CorrelationMatrix::identity(3);
        for q in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(matches!(
                binarize_top_q(&c, q),
                Err(BinarizeError::BadFraction { .. })
            ));
        }
    }
}
