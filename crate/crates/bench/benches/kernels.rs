use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use roughshe::analysis::{chaining_upper_bound, ReferenceMetric, DEFAULT_DEPTH};
use roughshe::gaussian::{gram, sample, CovarianceKernel};
use roughshe::noise::sample_noise;
use roughshe::solver::{picard_solve, solve_mild, SigmaSpec};
use roughshe::{HurstParameter, PointSet, SpaceTimeGrid};
use std::hint::black_box;

fn h() -> HurstParameter {
    HurstParameter::new(0.3).unwrap()
}

fn covariance(c: &mut Criterion) {
    let k = CovarianceKernel::new(h());
    c.bench_function("cov_fast", |b| b.iter(|| k.cov(black_box((1.0, 0.0)), black_box((0.7, 1.3)))));
    let ps = PointSet::grid(&[0.5, 1.0], -4.0, 0.125, 65).unwrap();
    c.bench_function("gram_130", |b| b.iter(|| gram(black_box(&ps), h())));
}

fn sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("sample_field");
    g.sample_size(10);
    for nx in [129, 513] {
        let ps = PointSet::grid(&[1.0], -8.0, 16.0 / (nx - 1) as f64, nx).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(nx), &ps, |b, ps| b.iter(|| sample(ps, h(), 100, 1).unwrap()));
    }
    g.finish();
    let grid = SpaceTimeGrid::new(1.0, 8.0, 256, 513).unwrap();
    c.bench_function("sample_noise_256x513", |b| b.iter(|| sample_noise(&grid, h(), black_box(3)).unwrap()));
}

fn solver(c: &mut Criterion) {
    let grid = SpaceTimeGrid::new(1.0, 8.0, 256, 513).unwrap();
    let noise = sample_noise(&grid, h(), 5).unwrap();
    let one = SigmaSpec::constant(1.0);
    c.bench_function("solve_mild_256x513", |b| b.iter(|| solve_mild(&grid, &one, &|_| 0.0, &noise, 0.0).unwrap()));
    let pgrid = SpaceTimeGrid::new(0.5, 8.0, 64, 129).unwrap();
    let hn = HurstParameter::new(0.35).unwrap();
    let pnoise = sample_noise(&pgrid, hn, 6).unwrap();
    let eps = 2.0 * pgrid.dx() * pgrid.dx();
    let mut g = c.benchmark_group("picard");
    g.sample_size(10);
    g.bench_function("sin_64x129", |b| {
        b.iter(|| picard_solve(&pgrid, &SigmaSpec::sine(), &|_| 1.0, &pnoise, eps, 16, 1e-10, 100).unwrap())
    });
    g.finish();
}

fn chaining(c: &mut Criterion) {
    let metric = ReferenceMetric::new(h());
    let mut g = c.benchmark_group("chaining");
    g.sample_size(10);
    g.bench_function("reference_L16", |b| b.iter(|| chaining_upper_bound(&metric, 1.0, 16.0, DEFAULT_DEPTH, 0.01).unwrap()));
    g.finish();
}

criterion_group!(benches, covariance, sampling, solver, chaining);
criterion_main!(benches);
