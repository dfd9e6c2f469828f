//! Two-sample statistics over correlation samples and the permutation test
//! wrapper producing empirical p-values.
//!
//! All four statistics are functions of the pooled pairwise distance matrix
//! under the chosen geometry, so the matrix is computed once and shared by
//! the permutation replicates. The Wasserstein statistic solves the exact
//! uniform-weight optimal transport problem by successive shortest paths.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::geometry::{self, GeometryError, GeometryKind};
use crate::types::SampleSet;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TwoSampleError {
    #[error("samples have dimensions {left} and {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("need at least {min} samples per group, got {got}")]
    TooFewSamples { got: usize, min: usize },
    #[error("permutation count must be at least 1")]
    NoPermutations,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    Mmd,
    Energy,
    Wasserstein,
    BiswasGhosh,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOptions {
    /// Heat-kernel bandwidth for the MMD statistic.
    pub theta: f64,
}

impl Default for TestOptions {
    fn default() -> Self {
        Self { theta: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TestReport {
    pub statistic_kind: StatisticKind,
    pub observed: f64,
    /// Replicate statistics, one per permutation, in replicate order.
    pub permuted: Vec<f64>,
    /// (1 + #{permuted >= observed}) / (N + 1).
    pub p_value: f64,
    pub permutations: usize,
    pub seed: u64,
    pub geometry: GeometryKind,
    /// Kernel bandwidth, present for MMD only.
    pub theta: Option<f64>,
}

fn check_pair(s1: &SampleSet, s2: &SampleSet) -> Result<(), TwoSampleError> {
    if s1.dim() != s2.dim() {
        return Err(TwoSampleError::DimensionMismatch {
            left: s1.dim(),
            right: s2.dim(),
        });
    }
    let min = 2;
    for m in [s1.len(), s2.len()] {
        if m < min {
            return Err(TwoSampleError::TooFewSamples { got: m, min });
        }
    }
    Ok(())
}

fn pooled_distances(
    s1: &SampleSet,
    s2: &SampleSet,
    geometry: GeometryKind,
) -> Result<DMatrix<f64>, TwoSampleError> {
    let mut items = Vec::with_capacity(s1.len() + s2.len());
    items.extend(s1.items().iter().cloned());
    items.extend(s2.items().iter().cloned());
    let pooled = SampleSet::new(items).expect("validated inputs");
    Ok(geometry::pairwise_distances(&pooled, geometry)?)
}

/// Statistic-specific pairwise transform: the statistics below are plain
/// block means of this matrix (or a transport solve for Wasserstein).
fn working_matrix(kind: StatisticKind, dist: &DMatrix<f64>, theta: f64) -> DMatrix<f64> {
    match kind {
        StatisticKind::Mmd => dist.map(|d| (-theta * d * d).exp()),
        StatisticKind::Energy | StatisticKind::BiswasGhosh => dist.clone(),
        StatisticKind::Wasserstein => dist.map(|d| d * d),
    }
}

fn block_mean(work: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    let mut sum = 0.0;
    for &i in rows {
        for &j in cols {
            sum += work[(i, j)];
        }
    }
    sum / (rows.len() * cols.len()) as f64
}

fn statistic(kind: StatisticKind, work: &DMatrix<f64>, left: &[usize], right: &[usize]) -> f64 {
    match kind {
        StatisticKind::Mmd => {
            block_mean(work, left, left) + block_mean(work, right, right)
                - 2.0 * block_mean(work, left, right)
        }
        StatisticKind::Energy => (2.0 * block_mean(work, left, right)
            - block_mean(work, left, left)
            - block_mean(work, right, right))
        .max(0.0),
        StatisticKind::BiswasGhosh => {
            let within1 = block_mean(work, left, left);
            let within2 = block_mean(work, right, right);
            let cross = block_mean(work, left, right);
            (within1 - cross) * (within1 - cross) + (within2 - cross) * (within2 - cross)
        }
        StatisticKind::Wasserstein => {
            let cost = DMatrix::from_fn(left.len(), right.len(), |a, b| {
                work[(left[a], right[b])]
            });
            transport_mean_cost(&cost).sqrt()
        }
    }
}

pub fn two_sample_stat(
    kind: StatisticKind,
    s1: &SampleSet,
    s2: &SampleSet,
    geometry: GeometryKind,
    options: &TestOptions,
) -> Result<f64, TwoSampleError> {
    check_pair(s1, s2)?;
    let dist = pooled_distances(s1, s2, geometry)?;
    let work = working_matrix(kind, &dist, options.theta);
    let left: Vec<usize> = (0..s1.len()).collect();
    let right: Vec<usize> = (s1.len()..s1.len() + s2.len()).collect();
    Ok(statistic(kind, &work, &left, &right))
}

/// Monte Carlo permutation test: N uniform relabelings of the pooled sample
/// preserving group sizes, each drawn from its own seeded stream so the
/// replicates are order-independent.
pub fn permutation_test(
    kind: StatisticKind,
    s1: &SampleSet,
    s2: &SampleSet,
    geometry: GeometryKind,
    permutations: usize,
    seed: u64,
    options: &TestOptions,
) -> Result<TestReport, TwoSampleError> {
    check_pair(s1, s2)?;
    if permutations == 0 {
        return Err(TwoSampleError::NoPermutations);
    }
    let (m1, m2) = (s1.len(), s2.len());
    let m = m1 + m2;
    let dist = pooled_distances(s1, s2, geometry)?;
    let work = working_matrix(kind, &dist, options.theta);
    let left: Vec<usize> = (0..m1).collect();
    let right: Vec<usize> = (m1..m).collect();
    let observed = statistic(kind, &work, &left, &right);
    let permuted: Vec<f64> = (0..permutations as u64)
        .into_par_iter()
        .map(|replicate| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(replicate);
            let mut indices: Vec<usize> = (0..m).collect();
            indices.shuffle(&mut rng);
            statistic(kind, &work, &indices[..m1], &indices[m1..])
        })
        .collect();
    let exceed = permuted.iter().filter(|&&v| v >= observed).count();
    let p_value = (1 + exceed) as f64 / (permutations + 1) as f64;
    Ok(TestReport {
        statistic_kind: kind,
        observed,
        permuted,
        p_value,
        permutations,
        seed,
        geometry,
        theta: match kind {
            StatisticKind::Mmd => Some(options.theta),
            _ => None,
        },
    })
}

struct FlowEdge {
    to: usize,
    cap: i64,
    cost: f64,
}

/// Successive shortest paths with potentials on a dense bipartite network.
/// Supplies are lcm(m1,m2)/m1 per row and lcm/m2 per column, so uniform
/// empirical weights become integers and the solve is exact.
fn transport_mean_cost(cost: &DMatrix<f64>) -> f64 {
    let (m1, m2) = (cost.nrows(), cost.ncols());
    let units = lcm(m1, m2);
    let source = m1 + m2;
    let sink = source + 1;
    let nodes = sink + 1;
    let mut edges: Vec<FlowEdge> = Vec::with_capacity(2 * (m1 * m2 + m1 + m2));
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let add = |edges: &mut Vec<FlowEdge>,
                   adjacency: &mut Vec<Vec<usize>>,
                   from: usize,
                   to: usize,
                   cap: i64,
                   cost: f64| {
        adjacency[from].push(edges.len());
        edges.push(FlowEdge { to, cap, cost });
        adjacency[to].push(edges.len());
        edges.push(FlowEdge {
            to: from,
            cap: 0,
            cost: -cost,
        });
    };
    for i in 0..m1 {
        add(&mut edges, &mut adjacency, source, i, (units / m1) as i64, 0.0);
    }
    for j in 0..m2 {
        add(&mut edges, &mut adjacency, m1 + j, sink, (units / m2) as i64, 0.0);
    }
    for i in 0..m1 {
        for j in 0..m2 {
            add(&mut edges, &mut adjacency, i, m1 + j, i64::MAX / 2, cost[(i, j)]);
        }
    }
    let mut potential = vec![0.0_f64; nodes];
    let mut total_cost = 0.0;
    let mut remaining = units as i64;
    while remaining > 0 {
        // dense Dijkstra over reduced costs
        let mut dist = vec![f64::INFINITY; nodes];
        let mut parent_edge = vec![usize::MAX; nodes];
        let mut done = vec![false; nodes];
        dist[source] = 0.0;
        loop {
            let mut current = usize::MAX;
            let mut best = f64::INFINITY;
            for n in 0..nodes {
                if !done[n] && dist[n] < best {
                    best = dist[n];
                    current = n;
                }
            }
            if current == usize::MAX {
                break;
            }
            done[current] = true;
            if current == sink {
                break;
            }
            for &e in &adjacency[current] {
                let edge = &edges[e];
                if edge.cap <= 0 || done[edge.to] {
                    continue;
                }
                let reduced = dist[current] + edge.cost + potential[current] - potential[edge.to];
                if reduced < dist[edge.to] {
                    dist[edge.to] = reduced;
                    parent_edge[edge.to] = e;
                }
            }
        }
        let to_sink = dist[sink];
        assert!(to_sink.is_finite(), "transport network must be feasible");
        // capping at the sink distance keeps every reduced cost nonnegative,
        // including edges touching nodes Dijkstra never finalized
        for n in 0..nodes {
            potential[n] += dist[n].min(to_sink);
        }
        // bottleneck along the shortest path, then augment
        let mut bottleneck = remaining;
        let mut node = sink;
        while node != source {
            let e = parent_edge[node];
            bottleneck = bottleneck.min(edges[e].cap);
            node = edges[e ^ 1].to;
        }
        let mut node = sink;
        while node != source {
            let e = parent_edge[node];
            edges[e].cap -= bottleneck;
            edges[e ^ 1].cap += bottleneck;
            total_cost += bottleneck as f64 * edges[e].cost;
            node = edges[e ^ 1].to;
        }
        remaining -= bottleneck;
    }
    total_cost / units as f64
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
