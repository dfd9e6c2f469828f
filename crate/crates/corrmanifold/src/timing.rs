//! Wall-clock benchmark of the distance routines on a reproducible
//! perturbed-pair workload.
//!
//! Each trial times one distance call between a normalized Wishart draw
//! around the identity and one around an AR(1) correlation with decay 0.8.
//! Draws are generated up front so the clock sees only the distance call.

use std::time::Instant;

use crate::geometry::{self, GeometryKind};
use crate::sim::{self, Generator, SimError, SimulationSpec};
use crate::types::SampleSet;

/// The quotient-affine search is too slow past this size for a benchmark
/// sweep to stay interactive.
pub const QAM_BENCH_DIM_CAP: usize = 200;

pub const BENCH_AR1_RHO: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TimingError {
    #[error("dimension {n} exceeds the quotient-affine benchmark cap {cap}")]
    QamDimensionCap { n: usize, cap: usize },
    #[error("trials must be at least 1")]
    NoTrials,
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TimingRow {
    pub n: usize,
    pub geometry: GeometryKind,
    pub trials: usize,
    pub mean_seconds: f64,
    pub std_seconds: f64,
}

fn perturbed_pairs(n: usize, trials: usize, seed: u64) -> Result<(SampleSet, SampleSet), SimError> {
    let identity_side = sim::simulate(&SimulationSpec {
        generator: Generator::WishartIdentity,
        dim: n,
        count: trials,
        dof: None,
        seed,
    })?;
    let ar1_side = sim::simulate(&SimulationSpec {
        generator: Generator::WishartAr1 {
            rho: BENCH_AR1_RHO,
        },
        dim: n,
        count: trials,
        dof: None,
        seed: seed ^ 0x9e3779b97f4a7c15,
    })?;
    Ok((identity_side, ar1_side))
}

/// One row per (dimension, geometry), in the given order. The same draws
/// feed every geometry at a given dimension, so rows are comparable.
pub fn benchmark_distances(
    dims: &[usize],
    trials: usize,
    geometries: &[GeometryKind],
    seed: u64,
) -> Result<Vec<TimingRow>, TimingError> {
    if trials == 0 {
        return Err(TimingError::NoTrials);
    }
    let includes_qam = geometries
        .iter()
        .any(|g| matches!(g, GeometryKind::Qam(_)));
    if let Some(&n) = dims.iter().find(|&&n| n > QAM_BENCH_DIM_CAP && includes_qam) {
        return Err(TimingError::QamDimensionCap {
            n,
            cap: QAM_BENCH_DIM_CAP,
        });
    }
    let mut rows = Vec::with_capacity(dims.len() * geometries.len());
    for &n in dims {
        let (left, right) = perturbed_pairs(n, trials, seed)?;
        for &geometry in geometries {
            let mut seconds = Vec::with_capacity(trials);
            for trial in 0..trials {
                let a = left.get(trial);
                let b = right.get(trial);
                let start = Instant::now();
                let d = geometry::distance(geometry, a, b)?;
                let elapsed = start.elapsed().as_secs_f64();
                assert!(d.is_finite());
                seconds.push(elapsed);
            }
            let mean = seconds.iter().sum::<f64>() / trials as f64;
            let variance = seconds
                .iter()
                .map(|&s| (s - mean) * (s - mean))
                .sum::<f64>()
                / trials as f64;
            rows.push(TimingRow {
                n,
                geometry,
                trials,
                mean_seconds: mean,
                std_seconds: variance.sqrt(),
            });
        }
    }
    Ok(rows)
}
