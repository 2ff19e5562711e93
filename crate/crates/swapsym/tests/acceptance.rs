//! Acceptance gate: ten end-to-end suites, each ending in a single
//! `acceptance NN <name>: PASS` or `... FAIL (detail)` line followed by an
//! assertion. Run with `--nocapture` to see every line.
//!
//! All tolerances and workloads are pinned here, not read from anywhere.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use swapsym::construct::{
    make_exchangeable, make_quasi_invariant, make_swap_invariant, make_weighted_swap_invariant,
    random_triplet, JumpKind,
};
use swapsym::exec::ExecMode;
use swapsym::hedge::{
    barrier_value_identity, convergence_study, run_backtest, run_backtest_with, BacktestConfig,
    BarrierContract, BarrierKind, BarrierPayoffKind, ValuationMode,
};
use swapsym::market::{MarketSpec, WeightKind};
use swapsym::measure::{Atom, LevyMeasure};
use swapsym::quasi::{solve_alpha, AlphaSolveOptions};
use swapsym::sim::{
    estimate_payoff, mc_symmetry_test, mc_symmetry_test_with, simulate_paths, PayoffSpec,
    SwapTestSpec,
};
use swapsym::symmetry::{
    check_charfn_symmetry, check_self_dual, check_swap_invariant, reduce_to_selfdual, GridSpec,
};
use swapsym::triplet::LevyTriplet;

/// Residual tolerance for structural (triplet) verdicts.
const STRUCTURAL_TOL: f64 = 1e-9;
/// Residual threshold for characteristic-function grid verdicts.
const CHARFN_TOL: f64 = 1e-10;
/// Two-sided bound on Monte-Carlo z-scores.
const Z_BOUND: f64 = 4.0;

fn conclude(tag: &str, pass: bool, detail: &str) {
    if pass {
        println!("acceptance {tag}: PASS");
    } else {
        println!("acceptance {tag}: FAIL ({detail})");
    }
    assert!(pass, "acceptance {tag}: {detail}");
}

// ---------------------------------------------------------------------------
// Shared builders
// ---------------------------------------------------------------------------

/// Mixed population: dimensions 2..4, all three jump kinds, roughly 40%
/// generic (asymmetric) models and 60% built to be swap-invariant or
/// exchangeable in the designated pair.
fn model_population(count: usize, seed: u64) -> Vec<(LevyTriplet, usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let dim = 2 + k % 3;
            let jumps = match (k / 3) % 3 {
                0 => JumpKind::None,
                1 => JumpKind::Atomic { atoms: 3 },
                _ => JumpKind::Mixture { components: 2 },
            };
            let i = 0;
            let j = 1 + k % (dim - 1);
            let t = match k % 5 {
                0 | 1 => random_triplet(&mut rng, dim, jumps),
                2 | 3 => make_swap_invariant(&mut rng, dim, i, j, jumps),
                _ => make_exchangeable(&mut rng, dim, i, j, jumps),
            };
            (t, i, j)
        })
        .collect()
}

fn pair_shift(dim: usize, i: usize, j: usize) -> Vec<f64> {
    let mut shift = vec![0.0; dim];
    shift[i] = 0.5;
    shift[j] = 0.5;
    shift
}

/// Deterministic battery of zero-strike basket weight vectors, each with at
/// least one decisively positive entry so no payoff is identically zero.
fn weight_battery(n_assets: usize, count: usize, seed: u64) -> Vec<PayoffSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let mut weights: Vec<f64> =
                (0..n_assets).map(|_| rng.random_range(-1.0..1.0)).collect();
            let pos = k % n_assets;
            weights[pos] = weights[pos].abs() + 0.3;
            PayoffSpec::ZeroStrikeBasket { weights }
        })
        .collect()
}

fn flat_market(t: LevyTriplet, spots: &[f64], weight: WeightKind) -> MarketSpec {
    let dim = t.dim();
    MarketSpec::new(
        t,
        DVector::from_row_slice(spots),
        DVector::zeros(dim),
        1.0,
        weight,
        0.0,
    )
    .unwrap()
}

fn bivariate_gbm(s1: f64, s2: f64, rho: f64, gamma: (f64, f64)) -> LevyTriplet {
    let c = rho * s1 * s2;
    let a = DMatrix::from_row_slice(2, 2, &[s1 * s1, c, c, s2 * s2]);
    let g = DVector::from_vec(vec![gamma.0, gamma.1]);
    LevyTriplet::new(a, LevyMeasure::zero(2), g).unwrap()
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

// ---------------------------------------------------------------------------
// 01: structural verdicts match characteristic-function verdicts
// ---------------------------------------------------------------------------

#[test]
fn a01_structural_and_charfn_verdicts_agree() {
    let start = Instant::now();
    let population = model_population(500, 31);
    let grid = GridSpec { count: 1000, radius: 2.0, seed: 77 };

    let mut symmetric = 0usize;
    let mut asymmetric = 0usize;
    let mut mismatches: Vec<(usize, bool, f64)> = Vec::new();
    for (k, (t, i, j)) in population.iter().enumerate() {
        let structural = check_swap_invariant(t, *i, *j, None, STRUCTURAL_TOL).unwrap();
        let shift = pair_shift(t.dim(), *i, *j);
        let residual =
            check_charfn_symmetry(t, *i, *j, &shift, t.dim(), 0.0, &grid).unwrap();
        let analytic = residual <= CHARFN_TOL;
        if structural.pass {
            symmetric += 1;
        } else {
            asymmetric += 1;
        }
        if structural.pass != analytic {
            mismatches.push((k, structural.pass, residual));
        }
    }
    let elapsed = start.elapsed();

    let pass = mismatches.is_empty()
        && symmetric >= 50
        && asymmetric >= 50
        && elapsed < Duration::from_secs(120);
    conclude(
        "01 structural-vs-charfn verdict agreement",
        pass,
        &format!(
            "{} disagreements (first {:?}); {symmetric} symmetric, {asymmetric} asymmetric; {elapsed:.1?}",
            mismatches.len(),
            mismatches.first(),
        ),
    );
}

// ---------------------------------------------------------------------------
// 02: bivariate diffusions — risk-neutral passes, drift bumps fail
// ---------------------------------------------------------------------------

#[test]
fn a02_bivariate_risk_neutral_diffusions_are_swap_invariant_exactly() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut clean_failures = 0usize;
    let mut bumped_accepts = 0usize;
    for _ in 0..100 {
        let s1: f64 = rng.random_range(0.1..0.6);
        let s2: f64 = rng.random_range(0.1..0.6);
        let rho: f64 = rng.random_range(-0.95..0.95);

        let t = bivariate_gbm(s1, s2, rho, (-0.5 * s1 * s1, -0.5 * s2 * s2));
        let report = check_swap_invariant(&t, 0, 1, None, STRUCTURAL_TOL).unwrap();
        // Martingale drift satisfies the two-asset condition identically in
        // floating point, so the verdict is exact, not approximate.
        if !(report.pass && report.max_residual() == 0.0) {
            clean_failures += 1;
        }

        let bump = (1e-3 + 0.1 * rng.random::<f64>())
            * if rng.random::<bool>() { 1.0 } else { -1.0 };
        let bumped = bivariate_gbm(s1, s2, rho, (-0.5 * s1 * s1, -0.5 * s2 * s2 + bump));
        if check_swap_invariant(&bumped, 0, 1, None, STRUCTURAL_TOL).unwrap().pass {
            bumped_accepts += 1;
        }
    }
    let elapsed = start.elapsed();

    let pass = clean_failures == 0 && bumped_accepts == 0 && elapsed < Duration::from_secs(1);
    conclude(
        "02 bivariate risk-neutral exact / drift-bump rejection",
        pass,
        &format!(
            "{clean_failures} clean models rejected, {bumped_accepts} bumped models accepted; {elapsed:.1?}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 03: trivariate cross-covariance condition is sharp
// ---------------------------------------------------------------------------

#[test]
fn a03_trivariate_cross_condition_is_sharp() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut clean_failures = 0usize;
    let mut bumped_accepts = 0usize;
    for _ in 0..100 {
        let entries: Vec<f64> = (0..9).map(|_| rng.random_range(-0.3..0.3)).collect();
        let b = DMatrix::from_row_slice(3, 3, &entries);
        let mut a = &b * b.transpose() + DMatrix::identity(3, 3);
        // Force the third-asset condition a_20 - a_21 = (a_00 - a_11)/2;
        // diagonal dominance keeps the matrix positive definite.
        let forced = a[(2, 1)] + 0.5 * (a[(0, 0)] - a[(1, 1)]);
        a[(2, 0)] = forced;
        a[(0, 2)] = forced;
        let gamma =
            DVector::from_vec(vec![-0.5 * a[(0, 0)], -0.5 * a[(1, 1)], -0.5 * a[(2, 2)]]);

        let t = LevyTriplet::new(a.clone(), LevyMeasure::zero(3), gamma.clone()).unwrap();
        if !check_swap_invariant(&t, 0, 1, None, STRUCTURAL_TOL).unwrap().pass {
            clean_failures += 1;
        }

        let mut ab = a.clone();
        ab[(2, 0)] += 1e-3;
        ab[(0, 2)] = ab[(2, 0)];
        let tb = LevyTriplet::new(ab, LevyMeasure::zero(3), gamma).unwrap();
        if check_swap_invariant(&tb, 0, 1, None, 1e-6).unwrap().pass {
            bumped_accepts += 1;
        }
    }
    let elapsed = start.elapsed();

    let pass = clean_failures == 0 && bumped_accepts == 0 && elapsed < Duration::from_secs(1);
    conclude(
        "03 trivariate cross-covariance condition sharpness",
        pass,
        &format!(
            "{clean_failures} conforming matrices rejected, {bumped_accepts} perturbed accepted; {elapsed:.1?}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 04: reduction to a self-dual factor preserves the verdict
// ---------------------------------------------------------------------------

#[test]
fn a04_selfdual_reduction_round_trip_agrees() {
    let start = Instant::now();
    let population = model_population(500, 31);
    let grid = GridSpec { count: 1000, radius: 2.0, seed: 78 };

    let mut mismatches: Vec<(usize, bool, f64)> = Vec::new();
    for (k, (t, i, j)) in population.iter().enumerate() {
        let structural = check_swap_invariant(t, *i, *j, None, STRUCTURAL_TOL).unwrap().pass;
        let (reduced, idx) = reduce_to_selfdual(t, *i, *j).unwrap();
        let residual = check_self_dual(&reduced, idx, &grid).unwrap();
        if structural != (residual <= CHARFN_TOL) {
            mismatches.push((k, structural, residual));
        }
    }
    let elapsed = start.elapsed();

    let pass = mismatches.is_empty() && elapsed < Duration::from_secs(120);
    conclude(
        "04 self-dual reduction round trip",
        pass,
        &format!("{} disagreements (first {:?}); {elapsed:.1?}", mismatches.len(), mismatches.first()),
    );
}

// ---------------------------------------------------------------------------
// 05: power solver — closed form, time scaling, Monte-Carlo confirmation
// ---------------------------------------------------------------------------

#[test]
fn a05_power_solver_closed_form_scaling_and_mc() {
    let start = Instant::now();
    let opts = AlphaSolveOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    // (a) Pure diffusion: the drift equation is linear, so the solved power
    // must match the explicit ratio to 1e-10.
    let mut max_gap = 0.0_f64;
    for k in 0..100 {
        let dim = 2 + (k % 2);
        let entries: Vec<f64> = (0..dim * dim).map(|_| rng.random_range(-0.5..0.5)).collect();
        let b = DMatrix::from_row_slice(dim, dim, &entries);
        let a = &b * b.transpose() + DMatrix::identity(dim, dim) * 0.3;
        let gamma = DVector::from_vec((0..dim).map(|_| rng.random_range(-0.1..0.1)).collect());
        let ri: f64 = rng.random_range(-0.05..0.05);
        let rj: f64 = rng.random_range(-0.05..0.05);
        let t = LevyTriplet::new(a.clone(), LevyMeasure::zero(dim), gamma.clone()).unwrap();

        let solved = solve_alpha(&t, 0, 1, (ri, rj), false, &opts).unwrap();
        let h = 0.5 * (a[(0, 0)] - a[(1, 1)]);
        let s = a[(0, 0)] + a[(1, 1)] - 2.0 * a[(0, 1)];
        let closed = 2.0 * (-h + (ri - rj) - (gamma[0] - gamma[1])) / s;
        max_gap = max_gap.max((solved - closed).abs());
    }
    let closed_ok = max_gap < 1e-10;

    // (b) The power is a property of the model, not the horizon: rescaling
    // time (and the rates with it) must leave it unchanged.
    let mut max_scale_gap = 0.0_f64;
    for k in 0..30 {
        let jumps = match k % 3 {
            0 => JumpKind::None,
            1 => JumpKind::Atomic { atoms: 2 },
            _ => JumpKind::Mixture { components: 1 },
        };
        let target: f64 = rng.random_range(-2.0..2.0);
        let (t, rates) = make_quasi_invariant(&mut rng, 2, 0, 1, target, false, jumps).unwrap();
        let base = solve_alpha(&t, 0, 1, rates, false, &opts).unwrap();
        for tau in [0.25, 1.0, 4.0] {
            let scaled = t.scale_time(tau).unwrap();
            let solved =
                solve_alpha(&scaled, 0, 1, (rates.0 * tau, rates.1 * tau), false, &opts).unwrap();
            max_scale_gap = max_scale_gap.max((solved - base).abs());
        }
    }
    let scaling_ok = max_scale_gap < 1e-10;

    // (c) Jump diffusion with Gaussian jumps: the solved power must make the
    // paired Monte-Carlo symmetry statistic ordinary noise at 1e6 paths.
    let (t, rates) =
        make_quasi_invariant(&mut rng, 2, 0, 1, 0.85, false, JumpKind::Mixture { components: 1 })
            .unwrap();
    let alpha = solve_alpha(&t, 0, 1, rates, false, &opts).unwrap();
    let market = MarketSpec::new(
        t,
        DVector::from_row_slice(&[1.0, 1.0]),
        DVector::from_row_slice(&[-rates.0, -rates.1]),
        1.0,
        WeightKind::None,
        0.0,
    )
    .unwrap();
    let battery = weight_battery(2, 5, 55);
    let report = mc_symmetry_test(
        &market,
        &SwapTestSpec { i: 0, j: 1, alpha },
        &battery,
        1_000_000,
        5005,
    )
    .unwrap();
    let mc_ok = report.all_within(Z_BOUND);
    let elapsed = start.elapsed();

    let pass = closed_ok && scaling_ok && mc_ok && elapsed < Duration::from_secs(300);
    conclude(
        "05 power solver closed form / time scaling / MC",
        pass,
        &format!(
            "closed-form gap {max_gap:.2e}, scaling gap {max_scale_gap:.2e}, max |z| {:.2}; {elapsed:.1?}",
            report.max_abs_z()
        ),
    );
}

// ---------------------------------------------------------------------------
// 06: simulated exchange prices match the closed form
// ---------------------------------------------------------------------------

#[test]
fn a06_zero_strike_exchange_price_matches_closed_form() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let payoff = PayoffSpec::ZeroStrikeBasket { weights: vec![1.0, -1.0] };

    let mut worst_ratio = 0.0_f64;
    for k in 0..20u64 {
        let s1: f64 = rng.random_range(50.0..150.0);
        let s2: f64 = rng.random_range(50.0..150.0);
        let sig1: f64 = rng.random_range(0.1..0.5);
        let sig2: f64 = rng.random_range(0.1..0.5);
        let rho: f64 = rng.random_range(-0.9..0.9);
        let horizon: f64 = rng.random_range(0.25..2.0);

        let t = bivariate_gbm(sig1, sig2, rho, (-0.5 * sig1 * sig1, -0.5 * sig2 * sig2));
        let market = MarketSpec::new(
            t,
            DVector::from_row_slice(&[s1, s2]),
            DVector::zeros(2),
            horizon,
            WeightKind::None,
            0.0,
        )
        .unwrap();
        let paths = simulate_paths(&market, 1_000_000, 1, 6000 + k).unwrap();
        let est = estimate_payoff(&paths, &payoff, 1).unwrap();

        let var = (sig1 * sig1 + sig2 * sig2 - 2.0 * rho * sig1 * sig2) * horizon;
        let sig = var.sqrt();
        let d1 = ((s1 / s2).ln() + 0.5 * var) / sig;
        let price = s1 * normal_cdf(d1) - s2 * normal_cdf(d1 - sig);

        worst_ratio = worst_ratio.max((est.mean - price).abs() / est.stderr);
    }
    let elapsed = start.elapsed();

    let pass = worst_ratio < 3.0 && elapsed < Duration::from_secs(300);
    conclude(
        "06 exchange price vs closed form",
        pass,
        &format!("worst |error|/stderr {worst_ratio:.2}; {elapsed:.1?}"),
    );
}

// ---------------------------------------------------------------------------
// 07: the four symmetry classes pass the MC z-test; a broken model fails
// ---------------------------------------------------------------------------

#[test]
fn a07_symmetry_classes_pass_mc_and_broken_model_fails() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    const PATHS: usize = 1_000_000;
    let opts = AlphaSolveOptions::default();

    let mut class_z = Vec::new();

    // Exchangeable pair inside a three-asset model.
    let t1 = make_exchangeable(&mut rng, 3, 0, 1, JumpKind::Atomic { atoms: 3 });
    let m1 = flat_market(t1, &[1.1, 0.9, 1.3], WeightKind::None);
    let r1 = mc_symmetry_test(
        &m1,
        &SwapTestSpec { i: 0, j: 1, alpha: 0.0 },
        &weight_battery(3, 10, 71),
        PATHS,
        701,
    )
    .unwrap();
    class_z.push(("exchangeable", r1.max_abs_z()));

    // Bivariate swap-invariant with unequal volatilities.
    let t2 = bivariate_gbm(0.3, 0.25, 0.2, (-0.5 * 0.3 * 0.3, -0.5 * 0.25 * 0.25));
    let m2 = flat_market(t2, &[1.0, 1.0], WeightKind::None);
    let r2 = mc_symmetry_test(
        &m2,
        &SwapTestSpec { i: 0, j: 1, alpha: 0.0 },
        &weight_battery(2, 10, 72),
        PATHS,
        702,
    )
    .unwrap();
    class_z.push(("bivariate swap-invariant", r2.max_abs_z()));

    // Swap-invariance under the multiplicative weight of a third coordinate.
    let t3 = make_weighted_swap_invariant(&mut rng, 2, 0, 1, JumpKind::Atomic { atoms: 2 });
    let m3 = flat_market(t3, &[1.0, 1.0, 1.0], WeightKind::LastCoordinate);
    let r3 = mc_symmetry_test(
        &m3,
        &SwapTestSpec { i: 0, j: 1, alpha: 0.0 },
        &weight_battery(2, 10, 73),
        PATHS,
        703,
    )
    .unwrap();
    class_z.push(("weighted", r3.max_abs_z()));

    // Quasi-invariance with the solved power and distinct asset rates.
    let (t4, rates) =
        make_quasi_invariant(&mut rng, 2, 0, 1, 0.6, false, JumpKind::Atomic { atoms: 2 }).unwrap();
    assert_ne!(rates.0, rates.1, "the quasi class needs a genuine rate gap");
    let alpha4 = solve_alpha(&t4, 0, 1, rates, false, &opts).unwrap();
    let m4 = MarketSpec::new(
        t4,
        DVector::from_row_slice(&[1.0, 1.0]),
        DVector::from_row_slice(&[-rates.0, -rates.1]),
        1.0,
        WeightKind::None,
        0.0,
    )
    .unwrap();
    let r4 = mc_symmetry_test(
        &m4,
        &SwapTestSpec { i: 0, j: 1, alpha: alpha4 },
        &weight_battery(2, 10, 74),
        PATHS,
        704,
    )
    .unwrap();
    class_z.push(("quasi", r4.max_abs_z()));

    // A drift-broken variant must light up unmistakably.
    let tb = bivariate_gbm(0.3, 0.25, 0.2, (-0.5 * 0.3 * 0.3, -0.5 * 0.25 * 0.25 + 0.05));
    let mb = flat_market(tb, &[1.0, 1.0], WeightKind::None);
    let rb = mc_symmetry_test(
        &mb,
        &SwapTestSpec { i: 0, j: 1, alpha: 0.0 },
        &weight_battery(2, 10, 75),
        PATHS,
        705,
    )
    .unwrap();
    let broken_z = rb.max_abs_z();
    let elapsed = start.elapsed();

    let classes_ok = class_z.iter().all(|(_, z)| *z < Z_BOUND);
    let pass = classes_ok && broken_z > Z_BOUND && elapsed < Duration::from_secs(300);
    conclude(
        "07 symmetry-class MC z-tests",
        pass,
        &format!("class max |z| {class_z:?}, broken max |z| {broken_z:.1}; {elapsed:.1?}"),
    );
}

// ---------------------------------------------------------------------------
// 08: knock-out hedge error shrinks with monitoring frequency
// ---------------------------------------------------------------------------

#[test]
fn a08_knockout_hedge_error_shrinks_with_monitoring_frequency() {
    let start = Instant::now();
    let a = DMatrix::from_row_slice(2, 2, &[0.0625, 0.01875, 0.01875, 0.0625]);
    let t = LevyTriplet::with_martingale_drift(a, LevyMeasure::zero(2)).unwrap();
    let market = flat_market(t, &[120.0, 95.0], WeightKind::None);
    let contract =
        BarrierContract::new(BarrierPayoffKind::Swap { a: 1.0, b: 1.0 }, BarrierKind::KnockOut, 1.0)
            .unwrap();

    let mut rows: Vec<(usize, f64, f64)> = Vec::new();
    let mut t0_ok = true;
    let mut warned = false;
    for steps in [250usize, 500, 1000, 2000] {
        let config = BacktestConfig {
            n_paths: 100_000,
            n_steps: steps,
            seed: 88,
            valuation: ValuationMode::ClosedFormMargrabe,
        };
        let report = run_backtest(&market, &contract, 0.0, &config).unwrap();
        // Static replication prices the knocked-out swap at the spot spread.
        t0_ok &= (report.t0_value.mean - 25.0).abs() < 1e-9;
        warned |= report.symmetry_warning.is_some();
        rows.push((steps, report.mean_abs_pnl, report.abs_pnl_stderr));
    }

    let mut monotone = true;
    for w in rows.windows(2) {
        let (_, m0, se0) = w[0];
        let (_, m1, se1) = w[1];
        monotone &= m1 < m0 + 2.0 * (se0 * se0 + se1 * se1).sqrt();
    }
    let final_fraction = rows[3].1 / 25.0;

    let mut identity_ok = true;
    let mut identity_zs = Vec::new();
    for (state, remaining) in
        [([100.0, 100.0], 0.5), ([85.0, 85.0], 0.25), ([110.0, 110.0], 0.75)]
    {
        let idr =
            barrier_value_identity(&market, &contract, 0.0, &state, remaining, 200_000, 888)
                .unwrap();
        identity_ok &= idr.z.abs() < Z_BOUND;
        identity_zs.push(idr.z);
    }
    let elapsed = start.elapsed();

    let pass = t0_ok
        && !warned
        && monotone
        && final_fraction < 0.01
        && identity_ok
        && elapsed < Duration::from_secs(600);
    conclude(
        "08 knock-out hedge convergence and barrier identity",
        pass,
        &format!(
            "mean |pnl| by steps {rows:?}, final fraction {final_fraction:.4}, identity z {identity_zs:?}; {elapsed:.1?}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 09: knock-in hedge under jumps super-replicates
// ---------------------------------------------------------------------------

#[test]
fn a09_knockin_hedge_super_replicates_under_jumps() {
    let start = Instant::now();
    let a = DMatrix::from_row_slice(2, 2, &[0.04, 0.012, 0.012, 0.04]);
    let nu = LevyMeasure::atomic(
        2,
        vec![
            Atom { location: DVector::from_vec(vec![-0.25, 0.0]), mass: 0.5 },
            Atom { location: DVector::from_vec(vec![0.0, -0.25]), mass: 0.5 },
        ],
    )
    .unwrap();
    let t = LevyTriplet::with_martingale_drift(a, nu).unwrap();
    let market = flat_market(t, &[105.0, 100.0], WeightKind::None);
    let contract =
        BarrierContract::new(BarrierPayoffKind::Swap { a: 1.0, b: 1.0 }, BarrierKind::KnockIn, 1.0)
            .unwrap();
    let config = BacktestConfig {
        n_paths: 4_000,
        n_steps: 100,
        seed: 99,
        valuation: ValuationMode::NestedMc { inner: 4_000 },
    };
    let report = run_backtest(&market, &contract, 0.0, &config).unwrap();
    let elapsed = start.elapsed();

    let no_warning = report.symmetry_warning.is_none();
    let super_replicates = report.mean_pnl >= -3.0 * report.pnl_stderr;
    let jumps_crossed = report.jump_cross_fraction > 0.0;
    let decomposition_exact = report.decomposition_max_error == 0.0;
    let breaches = report.knockout_fraction > 0.2;

    let pass = no_warning && super_replicates && jumps_crossed && decomposition_exact && breaches;
    conclude(
        "09 knock-in hedge under jumps",
        pass,
        &format!(
            "mean pnl {:.4} (stderr {:.4}), jump-cross {:.3}, decomposition error {:.1e}, breach fraction {:.3}, warning {:?}; {elapsed:.1?}",
            report.mean_pnl,
            report.pnl_stderr,
            report.jump_cross_fraction,
            report.decomposition_max_error,
            report.knockout_fraction,
            report.symmetry_warning,
        ),
    );
}

// ---------------------------------------------------------------------------
// 10: same-seed reruns are byte-identical, in both execution modes
// ---------------------------------------------------------------------------

#[test]
fn a10_same_seed_reruns_are_byte_identical() {
    let start = Instant::now();

    // One reduced-scale pass through every randomized pipeline, serialized
    // into a single JSON artifact.
    let compose = || -> String {
        let mut doc: Vec<serde_json::Value> = Vec::new();

        let population = model_population(12, 1010);
        let grid = GridSpec { count: 200, radius: 2.0, seed: 101 };
        for (t, i, j) in &population {
            let structural = check_swap_invariant(t, *i, *j, None, STRUCTURAL_TOL).unwrap();
            doc.push(serde_json::to_value(&structural).unwrap());
            let shift = pair_shift(t.dim(), *i, *j);
            let residual =
                check_charfn_symmetry(t, *i, *j, &shift, t.dim(), 0.0, &grid).unwrap();
            doc.push(serde_json::to_value(residual).unwrap());
        }

        let mut rng = ChaCha8Rng::seed_from_u64(1011);
        let (t, rates) =
            make_quasi_invariant(&mut rng, 2, 0, 1, 0.4, false, JumpKind::Atomic { atoms: 2 })
                .unwrap();
        let alpha = solve_alpha(&t, 0, 1, rates, false, &AlphaSolveOptions::default()).unwrap();
        doc.push(serde_json::to_value(alpha).unwrap());

        let market = MarketSpec::new(
            t,
            DVector::from_row_slice(&[1.0, 1.0]),
            DVector::from_row_slice(&[-rates.0, -rates.1]),
            1.0,
            WeightKind::None,
            0.0,
        )
        .unwrap();
        let z_report = mc_symmetry_test(
            &market,
            &SwapTestSpec { i: 0, j: 1, alpha },
            &weight_battery(2, 4, 104),
            20_000,
            1012,
        )
        .unwrap();
        doc.push(serde_json::to_value(&z_report).unwrap());

        let a = DMatrix::from_row_slice(2, 2, &[0.0625, 0.01875, 0.01875, 0.0625]);
        let gt = LevyTriplet::with_martingale_drift(a, LevyMeasure::zero(2)).unwrap();
        let gbm = flat_market(gt, &[120.0, 95.0], WeightKind::None);
        let contract = BarrierContract::new(
            BarrierPayoffKind::Swap { a: 1.0, b: 1.0 },
            BarrierKind::KnockOut,
            1.0,
        )
        .unwrap();
        let config = BacktestConfig {
            n_paths: 200,
            n_steps: 25,
            seed: 1013,
            valuation: ValuationMode::NestedMc { inner: 500 },
        };
        let backtest = run_backtest(&gbm, &contract, 0.0, &config).unwrap();
        doc.push(serde_json::to_value(&backtest).unwrap());

        let study = convergence_study(
            &gbm,
            &contract,
            0.0,
            &[5, 10],
            300,
            1014,
            ValuationMode::ClosedFormMargrabe,
        )
        .unwrap();
        doc.push(serde_json::to_value(&study).unwrap());

        let identity =
            barrier_value_identity(&gbm, &contract, 0.0, &[100.0, 100.0], 0.5, 2_000, 1015)
                .unwrap();
        doc.push(serde_json::to_value(&identity).unwrap());

        serde_json::to_string(&doc).unwrap()
    };

    let first = compose();
    let second = compose();
    let rerun_identical = first == second;

    // The parallel and sequential execution paths must produce the same
    // bytes, so determinism does not depend on the thread count.
    let a = DMatrix::from_row_slice(2, 2, &[0.0625, 0.01875, 0.01875, 0.0625]);
    let gt = LevyTriplet::with_martingale_drift(a, LevyMeasure::zero(2)).unwrap();
    let gbm = flat_market(gt, &[120.0, 95.0], WeightKind::None);
    let contract = BarrierContract::new(
        BarrierPayoffKind::Swap { a: 1.0, b: 1.0 },
        BarrierKind::KnockOut,
        1.0,
    )
    .unwrap();
    let config = BacktestConfig {
        n_paths: 300,
        n_steps: 20,
        seed: 1016,
        valuation: ValuationMode::ClosedFormMargrabe,
    };
    let par = run_backtest_with(&gbm, &contract, 0.0, &config, ExecMode::default()).unwrap();
    let seq = run_backtest_with(&gbm, &contract, 0.0, &config, ExecMode::Sequential).unwrap();
    let modes_identical = serde_json::to_string(&par).unwrap() == serde_json::to_string(&seq).unwrap();

    let z_par = mc_symmetry_test_with(
        &gbm,
        &SwapTestSpec { i: 0, j: 1, alpha: 0.0 },
        &weight_battery(2, 3, 105),
        10_000,
        1017,
        ExecMode::default(),
    )
    .unwrap();
    let z_seq = mc_symmetry_test_with(
        &gbm,
        &SwapTestSpec { i: 0, j: 1, alpha: 0.0 },
        &weight_battery(2, 3, 105),
        10_000,
        1017,
        ExecMode::Sequential,
    )
    .unwrap();
    let z_modes_identical =
        serde_json::to_string(&z_par).unwrap() == serde_json::to_string(&z_seq).unwrap();
    let elapsed = start.elapsed();

    let pass = rerun_identical && modes_identical && z_modes_identical;
    conclude(
        "10 same-seed byte-identical reruns",
        pass,
        &format!(
            "rerun identical {rerun_identical}, backtest modes identical {modes_identical}, z-test modes identical {z_modes_identical}; {elapsed:.1?}"
        ),
    );
}
