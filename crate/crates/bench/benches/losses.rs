use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mixagg_core::aggregation::{aggregate_crps_mixable, aggregate_mixture};
use mixagg_core::losses::{
    crps, energy_distance, mmd_squared, ot1d_cost, scrps, Kernel, SphereDirections, SquaredCost, DEFAULT_QUANTILE_NODES,
};
use mixagg_core::pointwise::BoundedInterval;
use mixagg_core::sampling::{random_grid_cdf, random_particles, random_weights};
use mixagg_core::types::GridDistribution1D;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bench_crps(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let iv = BoundedInterval::unit();
    let mut group = c.benchmark_group("crps");
    for points in [64, 1024] {
        let g = random_grid_cdf(&mut rng, iv, points).unwrap();
        let o = GridDistribution1D::point_mass(0.4, iv).unwrap();
        group.bench_with_input(BenchmarkId::new("vs_point_mass", points), &points, |b, _| {
            b.iter(|| crps(black_box(&g), black_box(&o), iv).unwrap())
        });
    }
    group.finish();
}

fn bench_aggregation(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let iv = BoundedInterval::unit();
    let mut group = c.benchmark_group("aggregate_1d");
    for n in [2, 10, 50] {
        let fs: Vec<_> = (0..n).map(|_| random_grid_cdf(&mut rng, iv, 1024).unwrap()).collect();
        let w = random_weights(&mut rng, n);
        group.bench_with_input(BenchmarkId::new("crps_substitution", n), &n, |b, _| {
            b.iter(|| aggregate_crps_mixable(black_box(&fs), black_box(&w)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("mixture", n), &n, |b, _| {
            b.iter(|| aggregate_mixture(black_box(&fs), black_box(&w)).unwrap())
        });
    }
    group.finish();
}

fn bench_particles(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut group = c.benchmark_group("particles");
    for n in [16, 128] {
        let g = random_particles(&mut rng, 3, n, 1.0).unwrap();
        let o = random_particles(&mut rng, 3, n, 1.0).unwrap();
        let dirs = SphereDirections::sample(3, 256, 4).unwrap();
        let kernel = Kernel::gaussian(1.0);
        group.bench_with_input(BenchmarkId::new("energy_distance", n), &n, |b, _| {
            b.iter(|| energy_distance(black_box(&g), black_box(&o)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("scrps_256_dirs", n), &n, |b, _| {
            b.iter(|| scrps(black_box(&g), black_box(&o), 1.0, &dirs).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("mmd_gaussian", n), &n, |b, _| {
            b.iter(|| mmd_squared(black_box(&g), black_box(&o), &kernel).unwrap())
        });
    }
    group.finish();
}

fn bench_transport(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let iv = BoundedInterval::new(0.0, 2.0).unwrap();
    let g = random_grid_cdf(&mut rng, iv, 256).unwrap();
    let o = random_grid_cdf(&mut rng, iv, 256).unwrap();
    let cost = SquaredCost::new(iv);
    c.bench_function("ot1d_squared_256", |b| {
        b.iter(|| ot1d_cost(black_box(&g), black_box(&o), &cost, DEFAULT_QUANTILE_NODES).unwrap())
    });
}

criterion_group!(benches, bench_crps, bench_aggregation, bench_particles, bench_transport);
criterion_main!(benches);
