//! Parallel vs sequential replica throughput on the two Monte Carlo hot
//! loops: terminal local time of the drifted reflection, and the terminal
//! gap of the three-particle system.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use inert_drift::observables::estimate_tau_infty;
use inert_drift::path::{DriftSpec, RngConfig};
use inert_drift::replicas::{map_replicas, map_replicas_sequential};
use inert_drift::three_particle::{simulate_three_terminal, ThreeParams};

fn bench_tau_infty(c: &mut Criterion) {
    let mut group = c.benchmark_group("tau_infty_200x5000");
    group.sample_size(10);
    let mu = DriftSpec::linear(1.0);
    group.bench_function(BenchmarkId::new("replicas", "parallel"), |b| {
        b.iter(|| {
            let est = estimate_tau_infty(
                black_box(&mu),
                200,
                1e-3,
                5.0,
                11.0,
                1e-3,
                RngConfig::new(1),
            )
            .unwrap();
            black_box(est.ecdf.len())
        })
    });
    group.bench_function(BenchmarkId::new("replicas", "sequential"), |b| {
        // estimate_tau_infty parallelizes internally; the sequential baseline
        // reproduces its per-replica work through the sequential mapper.
        b.iter(|| {
            let out = map_replicas_sequential(200, |i| {
                let est = estimate_tau_infty(
                    &mu,
                    1,
                    1e-3,
                    5.0,
                    11.0,
                    1e-3,
                    RngConfig::new(1).replica(i),
                )
                .unwrap();
                est.ecdf.values()[0]
            });
            black_box(out.len())
        })
    });
    group.finish();
}

fn bench_three_particle(c: &mut Criterion) {
    let mut group = c.benchmark_group("three_particle_400x2500");
    group.sample_size(10);
    let params = ThreeParams {
        x: 1.0,
        y: 0.5,
        v: 0.0,
        k: 1.0,
    };
    let work = |i: u64| {
        simulate_three_terminal(params, 4e-4, 1.0, RngConfig::new(2).replica(i))
            .unwrap()
            .gap
    };
    group.bench_function(BenchmarkId::new("replicas", "parallel"), |b| {
        b.iter(|| black_box(map_replicas(400, work).len()))
    });
    group.bench_function(BenchmarkId::new("replicas", "sequential"), |b| {
        b.iter(|| black_box(map_replicas_sequential(400, work).len()))
    });
    group.finish();
}

criterion_group!(benches, bench_tau_infty, bench_three_particle);
criterion_main!(benches);
