use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use irs_maxmin::{deterministic, instantaneous, power, rbm};
use irs_maxmin_bench::fixture;

fn de_solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("de_solve");
    for m in [32, 64, 128] {
        let (cfg, stats, sol) = fixture(m, 32, 4);
        g.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, _| {
            b.iter(|| deterministic::solve_de(&stats, &sol.p, &cfg).unwrap())
        });
    }
    g.finish();
}

fn power_solve(c: &mut Criterion) {
    let (cfg, stats, _) = fixture(64, 32, 4);
    c.bench_function("power_solve/64", |b| b.iter(|| power::solve_power(&stats, &cfg, None).unwrap()));
}

fn gradient(c: &mut Criterion) {
    let mut g = c.benchmark_group("envelope_gradient");
    for n in [16, 32, 64] {
        let (cfg, stats, sol) = fixture(64, n, 4);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| rbm::envelope_gradient(&stats, &sol, &cfg).unwrap())
        });
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let (cfg, stats, sol) = fixture(64, 32, 4);
    let mut g = c.benchmark_group("mc_rate");
    g.sample_size(10);
    g.bench_function("64x100", |b| {
        b.iter(|| instantaneous::mc_rate(&stats, stats.phase_noise, &sol.p, &cfg, 100, 1).unwrap())
    });
    g.finish();
}

fn pga_step(c: &mut Criterion) {
    let (cfg, stats, sol) = fixture(32, 16, 4);
    let mut g = c.benchmark_group("pga_step");
    g.sample_size(20);
    g.bench_function("32x16", |b| {
        b.iter_batched(
            || rbm::OptimizationState::new(stats.clone(), sol.clone(), &cfg).unwrap(),
            |mut st| rbm::pga_step(&mut st, &cfg).unwrap(),
            criterion::BatchSize::SmallInput,
        )
    });
    g.finish();
}

criterion_group!(benches, de_solve, power_solve, gradient, monte_carlo, pga_step);
criterion_main!(benches);
