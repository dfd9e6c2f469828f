//! Partitional clustering of correlation samples under the flat geometries,
//! with silhouette and Calinski-Harabasz validity indices.
//!
//! K-means runs Lloyd iterations on mapped coordinates, where coordinate
//! means are exactly the geometry's Frechet means. K-medoids is PAM
//! (build + swap) on the pairwise distance matrix. Spectral clustering
//! follows Ng, Jordan, and Weiss: heat-kernel affinity, symmetric
//! normalized Laplacian, row-normalized top eigenvectors, then k-means in
//! the spectral embedding.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{self, CoordinateSet, FlatGeometry, GeometryError};
use crate::linalg;
use crate::types::SampleSet;

/// Lloyd and PAM iteration caps; both converge long before this.
const CLUSTER_MAX_SWEEPS: usize = 200;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClusteringError {
    #[error("cluster count {k} must be in 2..={m}")]
    BadK { k: usize, m: usize },
    #[error("label vector length {got} does not match sample count {expected}")]
    BadLabels { got: usize, expected: usize },
    #[error("cluster {index} has no members")]
    EmptyCluster { index: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterMethod {
    Kmeans,
    Kmedoids,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterFlag {
    /// An empty cluster was repaired by moving in the farthest point.
    EmptyClusterRepair,
    /// A singleton cluster scored 0 in the silhouette, by convention.
    SingletonClusterConvention,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ClusteringResult {
    pub method: ClusterMethod,
    /// Cluster index in 0..k per sample, in input order; every cluster
    /// nonempty.
    pub labels: Vec<usize>,
    pub k: usize,
    /// Within-cluster dispersion: squared coordinate distances to the
    /// centroid (k-means), plain distances to the medoid (k-medoids),
    /// squared embedding distances (spectral).
    pub inertia: f64,
    pub seed: u64,
    pub converged: bool,
    /// Selected representatives, k-medoids only: indices into the input.
    pub medoids: Option<Vec<usize>>,
    pub flags: Vec<ClusterFlag>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterOptions {
    /// Independent k-means restarts; the lowest inertia wins, ties by
    /// restart index.
    pub restarts: usize,
    pub max_iterations: usize,
    /// Spectral affinity bandwidth; defaults to 1/median of the squared
    /// off-diagonal distances.
    pub spectral_theta: Option<f64>,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iterations: CLUSTER_MAX_SWEEPS,
            spectral_theta: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidityKind {
    Silhouette,
    CalinskiHarabasz,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidityScore {
    pub value: f64,
    pub flags: Vec<ClusterFlag>,
}

pub fn cluster(
    method: ClusterMethod,
    s: &SampleSet,
    k: usize,
    geometry: FlatGeometry,
    seed: u64,
    options: &ClusterOptions,
) -> Result<ClusteringResult, ClusteringError> {
    let m = s.len();
    if k < 2 || k > m {
        return Err(ClusteringError::BadK { k, m });
    }
    match method {
        ClusterMethod::Kmeans => {
            let coords = CoordinateSet::from_samples(s, geometry)?;
            let best = lloyd_best(coords.coords(), k, seed, options);
            Ok(assemble(ClusterMethod::Kmeans, best, k, seed, None))
        }
        ClusterMethod::Kmedoids => {
            let dist = geometry::pairwise_distances(s, geometry.to_kind())?;
            let (outcome, medoids) = pam(&dist, k);
            Ok(assemble(ClusterMethod::Kmedoids, outcome, k, seed, Some(medoids)))
        }
        ClusterMethod::Spectral => {
            let dist = geometry::pairwise_distances(s, geometry.to_kind())?;
            let embedding = spectral_embedding(&dist, k, options.spectral_theta);
            let best = lloyd_best(&embedding, k, seed, options);
            Ok(assemble(ClusterMethod::Spectral, best, k, seed, None))
        }
    }
}

struct SweepOutcome {
    labels: Vec<usize>,
    inertia: f64,
    converged: bool,
    repaired: bool,
    /// Objective after each update step; non-increasing for plain Lloyd.
    /// Exercised by the monotonicity tests only.
    #[cfg_attr(not(test), allow(dead_code))]
    history: Vec<f64>,
}

fn assemble(
    method: ClusterMethod,
    outcome: SweepOutcome,
    k: usize,
    seed: u64,
    medoids: Option<Vec<usize>>,
) -> ClusteringResult {
    let mut flags = Vec::new();
    if outcome.repaired {
        flags.push(ClusterFlag::EmptyClusterRepair);
    }
    ClusteringResult {
        method,
        labels: outcome.labels,
        k,
        inertia: outcome.inertia,
        seed,
        converged: outcome.converged,
        medoids,
        flags,
    }
}

/// D-squared seeding: each next center drawn with probability proportional
/// to the squared distance from the nearest chosen center.
fn kmeanspp(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let m = points.ncols();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..m));
    let mut d2 = vec![f64::INFINITY; m];
    while chosen.len() < k {
        let last = *chosen.last().expect("seeded");
        for j in 0..m {
            let dist = (points.column(j) - points.column(last)).norm_squared();
            if dist < d2[j] {
                d2[j] = dist;
            }
        }
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random_range(0.0..total);
            let mut acc = 0.0;
            let mut idx = None;
            for (j, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    idx = Some(j);
                    break;
                }
            }
            idx.unwrap_or_else(|| {
                (0..m).rev().find(|&j| d2[j] > 0.0).expect("total positive")
            })
        } else {
            // all points coincide with a center; any unchosen index works
            (0..m).find(|j| !chosen.contains(j)).unwrap_or(0)
        };
        chosen.push(pick);
    }
    chosen
}

fn lloyd(
    points: &DMatrix<f64>,
    k: usize,
    rng: &mut ChaCha8Rng,
    max_iterations: usize,
) -> SweepOutcome {
    let m = points.ncols();
    let dim = points.nrows();
    let seeds = kmeanspp(points, k, rng);
    let mut centroids = DMatrix::zeros(dim, k);
    for (c, &j) in seeds.iter().enumerate() {
        centroids.set_column(c, &points.column(j));
    }
    let mut labels = vec![usize::MAX; m];
    let mut repaired = false;
    let mut converged = false;
    let mut history = Vec::new();
    for _ in 0..max_iterations.max(1) {
        let mut changed = false;
        for j in 0..m {
            let mut best = (f64::INFINITY, 0);
            for c in 0..k {
                let d = (points.column(j) - centroids.column(c)).norm_squared();
                if d < best.0 {
                    best = (d, c);
                }
            }
            if labels[j] != best.1 {
                labels[j] = best.1;
                changed = true;
            }
        }
        // repair: an empty cluster takes the point farthest from its
        // centroid, drawn from a cluster that can spare one
        loop {
            let mut counts = vec![0usize; k];
            for &l in &labels {
                counts[l] += 1;
            }
            let Some(empty) = counts.iter().position(|&c| c == 0) else {
                break;
            };
            let mut far = (f64::NEG_INFINITY, 0);
            for j in 0..m {
                if counts[labels[j]] <= 1 {
                    continue;
                }
                let d = (points.column(j) - centroids.column(labels[j])).norm_squared();
                if d > far.0 {
                    far = (d, j);
                }
            }
            labels[far.1] = empty;
            repaired = true;
            changed = true;
        }
        if !changed {
            converged = true;
            break;
        }
        centroids.fill(0.0);
        let mut counts = vec![0usize; k];
        for j in 0..m {
            let mut col = centroids.column_mut(labels[j]);
            col += points.column(j);
            counts[labels[j]] += 1;
        }
        for c in 0..k {
            centroids.column_mut(c).scale_mut(1.0 / counts[c] as f64);
        }
        let objective: f64 = (0..m)
            .map(|j| (points.column(j) - centroids.column(labels[j])).norm_squared())
            .sum();
        history.push(objective);
    }
    let inertia = history.last().copied().unwrap_or_else(|| {
        (0..m)
            .map(|j| (points.column(j) - centroids.column(labels[j])).norm_squared())
            .sum()
    });
    SweepOutcome {
        labels,
        inertia,
        converged,
        repaired,
        history,
    }
}

fn lloyd_best(
    points: &DMatrix<f64>,
    k: usize,
    seed: u64,
    options: &ClusterOptions,
) -> SweepOutcome {
    let mut best: Option<SweepOutcome> = None;
    for restart in 0..options.restarts.max(1) as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(restart);
        let outcome = lloyd(points, k, &mut rng, options.max_iterations);
        let better = best
            .as_ref()
            .is_none_or(|b| outcome.inertia < b.inertia);
        if better {
            best = Some(outcome);
        }
    }
    best.expect("at least one restart")
}

/// PAM: greedy build phase, then best-improvement swaps until no swap
/// lowers the total within-cluster distance.
fn pam(dist: &DMatrix<f64>, k: usize) -> (SweepOutcome, Vec<usize>) {
    let m = dist.nrows();
    let total_from = |c: usize| -> f64 { (0..m).map(|j| dist[(j, c)]).sum() };
    let mut medoids = Vec::with_capacity(k);
    let first = (0..m)
        .min_by(|&a, &b| total_from(a).total_cmp(&total_from(b)))
        .expect("nonempty");
    medoids.push(first);
    let mut nearest: Vec<f64> = (0..m).map(|j| dist[(j, first)]).collect();
    while medoids.len() < k {
        let mut best = (f64::NEG_INFINITY, 0);
        for c in 0..m {
            if medoids.contains(&c) {
                continue;
            }
            let gain: f64 = (0..m).map(|j| (nearest[j] - dist[(j, c)]).max(0.0)).sum();
            if gain > best.0 {
                best = (gain, c);
            }
        }
        medoids.push(best.1);
        for j in 0..m {
            nearest[j] = nearest[j].min(dist[(j, best.1)]);
        }
    }
    let cost_of = |medoids: &[usize]| -> f64 {
        (0..m)
            .map(|j| {
                medoids
                    .iter()
                    .map(|&c| dist[(j, c)])
                    .fold(f64::INFINITY, f64::min)
            })
            .sum()
    };
    let mut cost = cost_of(&medoids);
    let mut history = vec![cost];
    let mut converged = false;
    for _ in 0..CLUSTER_MAX_SWEEPS {
        let mut best_swap: Option<(f64, usize, usize)> = None;
        for mi in 0..k {
            for h in 0..m {
                if medoids.contains(&h) {
                    continue;
                }
                let mut candidate = medoids.clone();
                candidate[mi] = h;
                let c = cost_of(&candidate);
                if c < cost && best_swap.as_ref().is_none_or(|&(b, _, _)| c < b) {
                    best_swap = Some((c, mi, h));
                }
            }
        }
        match best_swap {
            Some((c, mi, h)) => {
                medoids[mi] = h;
                cost = c;
                history.push(cost);
            }
            None => {
                converged = true;
                break;
            }
        }
    }
    let mut labels = vec![0usize; m];
    for j in 0..m {
        let mut best = (f64::INFINITY, 0);
        for (c, &med) in medoids.iter().enumerate() {
            if dist[(j, med)] < best.0 {
                best = (dist[(j, med)], c);
            }
        }
        labels[j] = best.1;
    }
    // a medoid always represents itself, even among duplicate points
    for (c, &med) in medoids.iter().enumerate() {
        labels[med] = c;
    }
    let inertia: f64 = (0..m).map(|j| dist[(j, medoids[labels[j]])]).sum();
    (
        SweepOutcome {
            labels,
            inertia,
            converged,
            repaired: false,
            history,
        },
        medoids,
    )
}

/// Row-normalized top-k eigenvectors of the symmetric normalized affinity,
/// one embedded point per column.
fn spectral_embedding(dist: &DMatrix<f64>, k: usize, theta: Option<f64>) -> DMatrix<f64> {
    let m = dist.nrows();
    let theta = theta.unwrap_or_else(|| {
        let mut sq: Vec<f64> = (0..m)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| dist[(i, j)] * dist[(i, j)])
            .collect();
        let med = linalg::median(&mut sq);
        if med > 0.0 {
            1.0 / med
        } else {
            1.0
        }
    });
    let mut w = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            0.0
        } else {
            (-theta * dist[(i, j)] * dist[(i, j)]).exp()
        }
    });
    linalg::symmetrize_mut(&mut w);
    let inv_sqrt_degree: Vec<f64> = (0..m)
        .map(|i| 1.0 / w.row(i).sum().max(f64::MIN_POSITIVE).sqrt())
        .collect();
    let mut laplacian = DMatrix::from_fn(m, m, |i, j| {
        w[(i, j)] * inv_sqrt_degree[i] * inv_sqrt_degree[j]
    });
    linalg::symmetrize_mut(&mut laplacian);
    let (_, vecs) = linalg::sym_eigen(&laplacian);
    let mut embedding = DMatrix::zeros(k, m);
    for j in 0..m {
        for c in 0..k {
            embedding[(c, j)] = vecs[(j, m - 1 - c)];
        }
        let norm = embedding.column(j).norm();
        if norm > 0.0 {
            embedding.column_mut(j).scale_mut(1.0 / norm);
        }
    }
    embedding
}

fn cluster_counts(labels: &[usize], m: usize) -> Result<Vec<usize>, ClusteringError> {
    if labels.len() != m {
        return Err(ClusteringError::BadLabels {
            got: labels.len(),
            expected: m,
        });
    }
    let k = labels.iter().max().map_or(0, |&v| v + 1);
    if k < 2 {
        return Err(ClusteringError::BadK { k, m });
    }
    let mut counts = vec![0usize; k];
    for &l in labels {
        counts[l] += 1;
    }
    if let Some(index) = counts.iter().position(|&c| c == 0) {
        return Err(ClusteringError::EmptyCluster { index });
    }
    Ok(counts)
}

pub fn validity(
    kind: ValidityKind,
    s: &SampleSet,
    labels: &[usize],
    geometry: FlatGeometry,
) -> Result<ValidityScore, ClusteringError> {
    let m = s.len();
    let counts = cluster_counts(labels, m)?;
    let k = counts.len();
    match kind {
        ValidityKind::Silhouette => {
            let dist = geometry::pairwise_distances(s, geometry.to_kind())?;
            let mut flags = Vec::new();
            let mut total = 0.0;
            for i in 0..m {
                let own = labels[i];
                if counts[own] == 1 {
                    if !flags.contains(&ClusterFlag::SingletonClusterConvention) {
                        flags.push(ClusterFlag::SingletonClusterConvention);
                    }
                    continue;
                }
                let mut sums = vec![0.0; k];
                for j in 0..m {
                    if j != i {
                        sums[labels[j]] += dist[(i, j)];
                    }
                }
                let a = sums[own] / (counts[own] - 1) as f64;
                let b = (0..k)
                    .filter(|&c| c != own)
                    .map(|c| sums[c] / counts[c] as f64)
                    .fold(f64::INFINITY, f64::min);
                total += (b - a) / a.max(b);
            }
            Ok(ValidityScore {
                value: total / m as f64,
                flags,
            })
        }
        ValidityKind::CalinskiHarabasz => {
            if k >= m {
                return Err(ClusteringError::BadK { k, m });
            }
            let coords = CoordinateSet::from_samples(s, geometry)?;
            let dim = coords.dim();
            let mut grand = nalgebra::DVector::zeros(dim);
            let mut centroids = DMatrix::zeros(dim, k);
            for j in 0..m {
                let p = coords.point(j);
                grand += &p;
                let mut col = centroids.column_mut(labels[j]);
                col += &p;
            }
            grand /= m as f64;
            for c in 0..k {
                centroids.column_mut(c).scale_mut(1.0 / counts[c] as f64);
            }
            let between: f64 = (0..k)
                .map(|c| counts[c] as f64 * (centroids.column(c) - &grand).norm_squared())
                .sum();
            let within: f64 = (0..m)
                .map(|j| (coords.point(j) - centroids.column(labels[j])).norm_squared())
                .sum();
            let value = (between / (k - 1) as f64) / (within / (m - k) as f64);
            Ok(ValidityScore {
                value,
                flags: Vec::new(),
            })
        }
    }
}

/// Hubert-Arabie adjusted Rand index between two partitions; 1 for
/// identical partitions, about 0 for independent ones.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "partitions must label the same samples");
    let m = a.len();
    let ka = a.iter().max().map_or(0, |&v| v + 1);
    let kb = b.iter().max().map_or(0, |&v| v + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for i in 0..m {
        table[a[i]][b[i]] += 1;
    }
    let choose2 = |n: u64| -> f64 { (n * n.saturating_sub(1)) as f64 / 2.0 };
    let sum_cells: f64 = table
        .iter()
        .flat_map(|row| row.iter())
        .map(|&n| choose2(n))
        .sum();
    let sum_rows: f64 = table
        .iter()
        .map(|row| choose2(row.iter().sum::<u64>()))
        .sum();
    let sum_cols: f64 = (0..kb)
        .map(|j| choose2(table.iter().map(|row| row[j]).sum::<u64>()))
        .sum();
    let total = choose2(m as u64);
    let expected = sum_rows * sum_cols / total;
    let max_index = (sum_rows + sum_cols) / 2.0;
    if (max_index - expected).abs() < 1e-300 {
        return 1.0;
    }
    (sum_cells - expected) / (max_index - expected)
}
