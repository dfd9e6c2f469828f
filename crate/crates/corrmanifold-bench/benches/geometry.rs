//! Time the distance kernels and flat centroids across dimensions. The CLI
//! `benchmark` verb reports the same quantities from inside a run; this is
//! the developer-facing harness for catching regressions.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use corrmanifold::frechet::frechet_mean;
use corrmanifold::geometry::distance;
use corrmanifold::sim::{simulate, Generator, SimulationSpec};
use corrmanifold::{GeometryKind, SampleSet};

fn draw(dim: usize, count: usize, seed: u64) -> SampleSet {
    simulate(&SimulationSpec {
        generator: Generator::WishartAr1 { rho: 0.5 },
        dim,
        count,
        dof: None,
        seed,
    })
    .expect("simulation parameters are valid")
}

fn bench_distance(c: &mut Criterion) {
    let mut group = c.benchmark_group("distance");
    for &dim in &[10usize, 50] {
        let s = draw(dim, 2, 40 + dim as u64);
        let (a, b) = (s.get(0), s.get(1));
        for kind in [GeometryKind::Ecm, GeometryKind::Lec, GeometryKind::Airm] {
            group.bench_with_input(
                BenchmarkId::new(kind.name(), dim),
                &dim,
                |bencher, _| bencher.iter(|| distance(kind, black_box(a), black_box(b)).unwrap()),
            );
        }
    }
    // QAM runs an inner optimization; keep it to the small size.
    let s = draw(10, 2, 50);
    group.bench_function(BenchmarkId::new("qam", 10), |bencher| {
        bencher.iter(|| distance(GeometryKind::qam(), black_box(s.get(0)), black_box(s.get(1))).unwrap())
    });
    group.finish();
}

fn bench_frechet_mean(c: &mut Criterion) {
    let mut group = c.benchmark_group("frechet_mean");
    group.sample_size(20);
    let s = draw(20, 30, 60);
    for kind in [GeometryKind::Ecm, GeometryKind::Lec, GeometryKind::Airm] {
        group.bench_function(kind.name(), |bencher| {
            bencher.iter(|| frechet_mean(black_box(&s), kind).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_distance, bench_frechet_mean);
criterion_main!(benches);
