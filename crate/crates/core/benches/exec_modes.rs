//! Parallel against forced-sequential execution on the heavy loops.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use conformal_core::exec;
use conformal_core::graph::{ball_sizes, ConformalWeight};
use conformal_core::partitions::{padding_profile, Ckr};
use conformal_core::separators::SeparatorTable;
use conformal_core::walks::{speed_profile, Metric, Start};
use conformal_core::{generate, GeneratorSpec};

fn modes(c: &mut Criterion) {
    let grid = generate(&GeneratorSpec::Grid { rows: 60, cols: 60, torus: false }).unwrap();
    let tri = generate(&GeneratorSpec::TriGrid { k: 40, torus: false }).unwrap();
    let w = ConformalWeight::uniform(grid.n(), 1.0);
    let wt = ConformalWeight::uniform(tri.n(), 1.0);
    let ckr = Ckr::new(&grid, &w, 8.0, 1).unwrap();

    let mut group = c.benchmark_group("exec_modes");
    group.sample_size(10);
    for (label, sequential) in [("parallel", false), ("sequential", true)] {
        exec::set_sequential(sequential);
        group.bench_function(BenchmarkId::new("ball_sizes", label), |b| b.iter(|| ball_sizes(&tri, &wt, 6.0)));
        group.bench_function(BenchmarkId::new("padding_profile", label), |b| {
            b.iter(|| padding_profile(&grid, &w, &ckr, 4.0, &[0.25, 0.5], 8).unwrap())
        });
        group.bench_function(BenchmarkId::new("speed_profile", label), |b| {
            b.iter(|| speed_profile(&grid, Metric::Graph, Start::Uniform, &[16, 64, 256], 2000, None, 1).unwrap())
        });
        group.bench_function(BenchmarkId::new("annulus_min_cuts", label), |b| {
            b.iter(|| SeparatorTable::min_cuts(&grid, 2, 6).unwrap())
        });
    }
    exec::set_sequential(false);
    group.finish();
}

criterion_group!(benches, modes);
criterion_main!(benches);
