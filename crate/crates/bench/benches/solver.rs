use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use storage_bench::small_spec;
use storage_core::girf::{girf, Conditioning, GirfSpec};
use storage_core::model::build_economy;
use storage_core::process::{kappa, tauchen_ar1, DiscountOperator};
use storage_core::solver::{egm_step, initial_policy, solve_egm, InitialGuess, SolverOptions};

fn operator(c: &mut Criterion) {
    let mut g = c.benchmark_group("egm_step");
    for (k, n) in [(100, 51), (1000, 101)] {
        let spec = small_spec(k, n);
        let eco = build_economy(&spec).unwrap();
        let opts = SolverOptions::from_spec(&spec).unwrap();
        let start = initial_policy(&eco, &opts.grid, InitialGuess::MeanOutput);
        g.bench_with_input(BenchmarkId::from_parameter(format!("{k}x{n}")), &start, |b, p| {
            b.iter(|| egm_step(&eco, &opts.grid, black_box(p)).unwrap())
        });
    }
    g.finish();
}

fn solve(c: &mut Criterion) {
    let spec = small_spec(100, 51);
    let eco = build_economy(&spec).unwrap();
    let opts = SolverOptions::from_spec(&spec).unwrap();
    let mut g = c.benchmark_group("solve");
    g.sample_size(10);
    g.bench_function("100x51", |b| {
        b.iter(|| solve_egm(black_box(&eco), &opts).unwrap())
    });
    g.finish();
}

fn yield_bound(c: &mut Criterion) {
    let chain = tauchen_ar1(1.0062, 0.9407, 0.03 * (1.0 - 0.9407f64.powi(2)).sqrt(), 101, 3.0).unwrap();
    let m = chain.coordinate(0).iter().map(|r| r.powf(-0.25)).collect();
    let op = DiscountOperator::new(chain, m).unwrap();
    c.bench_function("kappa/101", |b| b.iter(|| kappa(black_box(&op)).unwrap()));
}

fn impulse(c: &mut Criterion) {
    let spec = small_spec(100, 51);
    let eco = build_economy(&spec).unwrap();
    let sol = solve_egm(&eco, &SolverOptions::from_spec(&spec).unwrap()).unwrap();
    let gspec = GirfSpec {
        x0: Conditioning::Value(1.1),
        z0: Conditioning::State(25),
        n_paths: 20_000,
        volatility: false,
        ..GirfSpec::default()
    };
    let mut g = c.benchmark_group("girf");
    g.sample_size(10);
    g.bench_function("20k_paths", |b| {
        b.iter(|| girf(&sol, &eco, black_box(&gspec)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, operator, solve, yield_bound, impulse);
criterion_main!(benches);
