use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use deconv_core::estimators::{cdf_estimate, density_estimate};
use deconv_core::{
    build_gn, default_kernel, CoefficientSequence, GridConfig, InnovationLaw, NoiseModel, Simulator,
};

fn bench_simulate(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_lrd");
    group.sample_size(10);
    for n in [1usize << 12, 1 << 15] {
        let coeffs = CoefficientSequence::lrd_power(0.7, (10 * n).max(100_000)).unwrap();
        let sim = Simulator::new(coeffs, InnovationLaw::standard(), n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &sim, |b, sim| {
            let mut seed = 0u64;
            b.iter(|| {
                seed += 1;
                black_box(sim.simulate(seed));
            });
        });
    }
    group.finish();
}

fn bench_build_gn(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_gn");
    group.sample_size(10);
    let kernel = default_kernel();
    let grid = GridConfig::default();
    for (label, noise) in [
        ("laplace", NoiseModel::laplace(1.0).unwrap()),
        ("gauss", NoiseModel::gaussian(1.0).unwrap()),
    ] {
        group.bench_function(label, |b| {
            b.iter(|| black_box(build_gn(&kernel, &noise, black_box(0.3), &grid).unwrap()));
        });
    }
    group.finish();
}

fn bench_estimate(c: &mut Criterion) {
    let noise = NoiseModel::laplace(1.0).unwrap();
    let table = build_gn(&default_kernel(), &noise, 0.3, &GridConfig::default()).unwrap();
    let n = 1 << 15;
    let x = Simulator::new(CoefficientSequence::white_noise(), InnovationLaw::standard(), n)
        .unwrap()
        .simulate(1)
        .x;
    let y: Vec<f64> = x.iter().zip(noise.sample(n, 1)).map(|(a, b)| a + b).collect();
    let x0: Vec<f64> = (0..16).map(|i| -2.0 + 0.25 * i as f64).collect();

    let mut group = c.benchmark_group("estimate_n32768_16pts");
    group.bench_function("density", |b| {
        b.iter(|| black_box(density_estimate(&y, &table, &x0).unwrap()));
    });
    group.bench_function("cdf", |b| {
        b.iter(|| black_box(cdf_estimate(&y, &table, &x0).unwrap()));
    });
    group.finish();
}

criterion_group!(benches, bench_simulate, bench_build_gn, bench_estimate);
criterion_main!(benches);
