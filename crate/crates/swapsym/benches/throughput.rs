//! Throughput of the data-parallel kernels against their sequential
//! fallbacks, in one run: each group benchmarks the same workload under
//! both execution modes so the speedup is read off a single report.
//!
//! Run with `cargo bench` (the `parallel` feature is on by default; without
//! it only the sequential entries are produced).

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use nalgebra::{DMatrix, DVector};
use swapsym::exec::ExecMode;
use swapsym::hedge::{
    run_backtest_with, BacktestConfig, BarrierContract, BarrierKind, BarrierPayoffKind,
    ValuationMode,
};
use swapsym::market::MarketSpec;
use swapsym::measure::{Atom, LevyMeasure};
use swapsym::sim::{mc_symmetry_test_with, simulate_paths_with, SwapTestSpec};
use swapsym::triplet::LevyTriplet;

fn modes() -> Vec<(&'static str, ExecMode)> {
    let mut v = vec![("sequential", ExecMode::Sequential)];
    #[cfg(feature = "parallel")]
    v.push(("parallel", ExecMode::Parallel));
    v
}

fn gbm_market(dim: usize, horizon: f64) -> MarketSpec {
    let a = DMatrix::from_fn(dim, dim, |i, j| if i == j { 0.0625 } else { 0.015 });
    let gamma = DVector::from_element(dim, -0.5 * 0.0625);
    let triplet = LevyTriplet::new(a, LevyMeasure::zero(dim), gamma).unwrap();
    let spots = DVector::from_element(dim, 100.0);
    MarketSpec::simple(triplet, spots, horizon).unwrap()
}

fn jump_market(dim: usize, horizon: f64) -> MarketSpec {
    let a = DMatrix::from_fn(dim, dim, |i, j| if i == j { 0.04 } else { 0.01 });
    let mut atoms = Vec::new();
    for l in 0..dim {
        let mut location = DVector::zeros(dim);
        location[l] = -0.2;
        atoms.push(Atom { location, mass: 0.5 });
    }
    let nu = LevyMeasure::atomic(dim, atoms).unwrap();
    let triplet = LevyTriplet::with_martingale_drift(a, nu).unwrap();
    let spots = DVector::from_element(dim, 100.0);
    MarketSpec::simple(triplet, spots, horizon).unwrap()
}

fn bench_path_simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_paths");
    let n_paths = 2_000usize;
    let n_steps = 50usize;
    group.throughput(Throughput::Elements((n_paths * n_steps) as u64));
    for (market_name, market) in
        [("gbm3", gbm_market(3, 1.0)), ("jumps3", jump_market(3, 1.0))]
    {
        for (mode_name, mode) in modes() {
            group.bench_with_input(
                BenchmarkId::new(market_name, mode_name),
                &mode,
                |b, &mode| {
                    b.iter(|| simulate_paths_with(&market, n_paths, n_steps, 42, mode).unwrap())
                },
            );
        }
    }
    group.finish();
}

fn bench_symmetry_test(c: &mut Criterion) {
    let mut group = c.benchmark_group("mc_symmetry_test");
    let n_paths = 100_000usize;
    group.throughput(Throughput::Elements(n_paths as u64));
    let market = gbm_market(2, 1.0);
    let payoffs = vec![
        swapsym::sim::PayoffSpec::ZeroStrikeBasket { weights: vec![1.0, -1.0] },
        swapsym::sim::PayoffSpec::ZeroStrikeBasket { weights: vec![2.0, -0.5] },
    ];
    let spec = SwapTestSpec { i: 0, j: 1, alpha: 0.0 };
    for (mode_name, mode) in modes() {
        group.bench_with_input(BenchmarkId::new("gbm2", mode_name), &mode, |b, &mode| {
            b.iter(|| mc_symmetry_test_with(&market, &spec, &payoffs, n_paths, 42, mode).unwrap())
        });
    }
    group.finish();
}

fn bench_hedge_backtest(c: &mut Criterion) {
    let mut group = c.benchmark_group("hedge_backtest");
    group.sample_size(10);
    let market = gbm_market(2, 1.0);
    let market = market.with_spots(DVector::from_vec(vec![120.0, 100.0])).unwrap();
    let contract = BarrierContract::new(
        BarrierPayoffKind::Swap { a: 1.0, b: 1.0 },
        BarrierKind::KnockOut,
        1.0,
    )
    .unwrap();
    let config = BacktestConfig {
        n_paths: 2_000,
        n_steps: 250,
        seed: 42,
        valuation: ValuationMode::ClosedFormMargrabe,
    };
    group.throughput(Throughput::Elements((config.n_paths * config.n_steps) as u64));
    for (mode_name, mode) in modes() {
        group.bench_with_input(BenchmarkId::new("ko_swap", mode_name), &mode, |b, &mode| {
            b.iter(|| run_backtest_with(&market, &contract, 0.0, &config, mode).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_path_simulation, bench_symmetry_test, bench_hedge_backtest);
criterion_main!(benches);
