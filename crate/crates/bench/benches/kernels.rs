use criterion::{criterion_group, criterion_main, Criterion};
use lve_core::lvr_action::{action_gradient, action_s};
use lve_core::matrix_core::{eigh, sample_gaussian, stream};
use lve_core::partition_oracle::z_lvr;
use lve_core::{Beta, Coupling, EnsembleSpec, FussCatalan, FussCatalanParams, Method};
use num_complex::Complex64;
use std::hint::black_box;

fn fc_eval(c: &mut Criterion) {
    let fc = FussCatalan::new(FussCatalanParams::new(3).unwrap());
    let mut g = c.benchmark_group("fc_eval");
    for (name, z) in [("series", Complex64::new(-0.01, 0.02)), ("arc", Complex64::new(-0.8, 1.1)), ("asymptotic", Complex64::new(-40.0, 3.0))] {
        g.bench_function(name, |b| b.iter(|| fc.eval(black_box(z)).unwrap()));
    }
    g.finish();
}

fn eigh_bench(c: &mut Criterion) {
    let mut g = c.benchmark_group("eigh");
    for n in [2, 3, 6] {
        let k = sample_gaussian(&EnsembleSpec::new(n, Beta::Two).unwrap(), &mut stream(1, n as u64));
        g.bench_function(format!("N={n}"), |b| b.iter(|| eigh(black_box(&k)).unwrap()));
    }
    g.finish();
}

fn action(c: &mut Criterion) {
    let cp = Coupling::polar(2, 0.05, 1.0, 0.2, 1.0).unwrap();
    let spec = EnsembleSpec::new(3, Beta::One).unwrap();
    let s = eigh(&sample_gaussian(&spec, &mut stream(2, 0))).unwrap();
    c.bench_function("action_S N=3", |b| b.iter(|| action_s(&cp, &spec, black_box(&s)).unwrap()));
    c.bench_function("gradient N=3", |b| b.iter(|| action_gradient(&cp, &spec, black_box(&s)).unwrap()));
}

fn partition(c: &mut Criterion) {
    let cp = Coupling::real(2, 0.1).unwrap();
    let spec = EnsembleSpec::new(2, Beta::Two).unwrap();
    let mut g = c.benchmark_group("z_lvr");
    g.sample_size(10);
    g.bench_function("quadrature N=2", |b| b.iter(|| z_lvr(&cp, &spec, &Method::Quadrature { nodes: 64, workers: 1 }).unwrap()));
    g.finish();
}

criterion_group!(benches, fc_eval, eigh_bench, action, partition);
criterion_main!(benches);
