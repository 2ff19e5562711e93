//! Monte Carlo backtests of semi-static barrier hedges.
//!
//! Each path is simulated on a uniform monitoring grid. At the first
//! monitoring date where the barrier is breached the hedge is unwound: both
//! legs are marked at their conditional forward values and the difference is
//! the hedging error. All cash amounts are expressed in expiry-forward
//! units, so funding at the flat rate applies equally to every term and
//! drops out of the profit and loss.
//!
//! Settlement rules, per path:
//!
//! * knock-out, never breached: the contract and the long leg pay the same,
//!   the short reflected leg expires worthless on strictly-inside paths;
//!   the loss is the (normally zero) short leg payoff.
//! * knock-out, breached at `tau < T`: the contract is dead; unwinding
//!   yields `value(long) - value(short)` at the breach state.
//! * knock-in, breached: the reflected leg is swapped for the original
//!   claim, which then matches the contract; the cost is
//!   `value(reflected) - value(original)` at the breach state.
//! * knock-in, never breached: the contract pays nothing and the reflected
//!   leg's (normally zero) payoff is collected.
//!
//! A breach at the final date settles in realized payoffs instead of model
//! values. Under the matching distributional symmetry the two leg values
//! agree on the barrier, so every rule above nets to zero up to discrete
//! monitoring: the path overshoots the barrier between monitoring dates,
//! and the gap between the leg values at the overshot state is the entire
//! hedging error.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::market::MarketSpec;
use crate::quasi::check_quasi_swap_invariant;
use crate::rng::{substream, StreamPurpose};
use crate::sim::engine::StepSampler;
use crate::sim::payoff::PayoffSpec;
use crate::stats::{paired_z, McEstimate};
use crate::symmetry::{check_exchangeable, check_swap_invariant, check_weighted_swap_invariant};

use super::contract::{BarrierContract, BarrierKind, BarrierPayoffKind};
use super::value::{closed_form_value, nested_samples, ValuationMode};

/// Hard cap on `n_paths * inner` for nested valuation.
pub const MAX_NESTED_DRAWS: u128 = 5_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub valuation: ValuationMode,
}

fn default_seed() -> u64 {
    defaults::SEED
}

/// Results of one backtest. Vector fields are indexed by path; a
/// `tau_steps` entry of -1 marks a path that never breached the barrier.
/// `liquidation_residuals` holds `|value(long) - value(short)| / notional`
/// for breached paths only, in path order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub alpha: f64,
    /// Forward value of the hedge portfolio at inception; equals the model
    /// price of the barrier claim when the symmetry holds.
    pub t0_value: McEstimate,
    pub mean_pnl: f64,
    pub pnl_stderr: f64,
    pub mean_abs_pnl: f64,
    pub abs_pnl_stderr: f64,
    /// Fraction of paths whose barrier event occurred.
    pub knockout_fraction: f64,
    /// Fraction of paths whose first breach came with a jump that carried
    /// the pair strictly beyond the barrier.
    pub jump_cross_fraction: f64,
    /// Largest per-path violation of `knock-out + knock-in = European`.
    pub decomposition_max_error: f64,
    pub mean_liquidation_residual: f64,
    pub max_liquidation_residual: f64,
    /// Set when the model fails the structural symmetry the hedge needs.
    pub symmetry_warning: Option<String>,
    pub pnl: Vec<f64>,
    pub tau_steps: Vec<i64>,
    pub jump_crossed: Vec<bool>,
    pub liquidation_residuals: Vec<f64>,
}

struct PathOutcome {
    pnl: f64,
    tau_step: i64,
    jump_crossed: bool,
    liq_residual: f64,
    decomp_error: f64,
}

/// Backtest with the default execution mode.
pub fn run_backtest(
    market: &MarketSpec,
    contract: &BarrierContract,
    alpha: f64,
    config: &BacktestConfig,
) -> Result<BacktestReport> {
    run_backtest_with(market, contract, alpha, config, ExecMode::default())
}

/// Backtest `contract` hedged semi-statically under `market` dynamics.
///
/// `alpha` is the power correction on the reflected leg (zero for plain
/// symmetric models). Results are reproducible from `config.seed` and
/// identical across execution modes.
pub fn run_backtest_with(
    market: &MarketSpec,
    contract: &BarrierContract,
    alpha: f64,
    config: &BacktestConfig,
    mode: ExecMode,
) -> Result<BacktestReport> {
    let dim = market.dim();
    let euro = contract.european_payoff(dim)?;
    let refl = contract.reflected_payoff(dim, alpha)?;
    if config.n_paths < 2 {
        return Err(Error::InvalidArgument("need at least two paths".into()));
    }
    if config.n_steps == 0 {
        return Err(Error::InvalidArgument("need at least one monitoring step".into()));
    }
    let spots = market.spots().as_slice();
    if contract.barrier_hit(spots) {
        return Err(Error::InvalidContract(
            "prices are already beyond the barrier at inception".into(),
        ));
    }
    if let ValuationMode::NestedMc { inner } = config.valuation {
        if inner < 2 {
            return Err(Error::InvalidArgument("need at least two inner samples".into()));
        }
        let draws = config.n_paths as u128 * inner as u128;
        if draws > MAX_NESTED_DRAWS {
            return Err(Error::ResourceLimit(format!(
                "paths x inner = {draws} exceeds the cap of {MAX_NESTED_DRAWS}"
            )));
        }
    }

    let sampler = StepSampler::new(market)?;
    let horizon = market.horizon();
    let n_steps = config.n_steps;
    let dt = horizon / n_steps as f64;
    let poisson = sampler.poisson(dt)?;
    let carrying = market.carrying_costs();
    let notional = contract.notional(spots);

    // Mark the portfolio at inception first: with closed-form valuation this
    // also rejects unsupported payoff/model combinations before any path work.
    let t0_value =
        portfolio_t0_value(market, &sampler, contract, &euro, &refl, &config.valuation, config.seed)?;

    let seed = config.seed;
    let outcomes: Vec<Result<PathOutcome>> = map_indexed(config.n_paths, mode, |p| {
        settle_path(
            market, &sampler, contract, &euro, &refl, carrying, horizon, n_steps, dt,
            poisson.as_ref(), &config.valuation, notional, seed, p as u64,
        )
    });

    let n = config.n_paths;
    let mut pnl = Vec::with_capacity(n);
    let mut tau_steps = Vec::with_capacity(n);
    let mut jump_crossed = Vec::with_capacity(n);
    let mut liquidation_residuals = Vec::new();
    let mut decomposition_max_error = 0.0_f64;
    for outcome in outcomes {
        let o = outcome?;
        pnl.push(o.pnl);
        tau_steps.push(o.tau_step);
        jump_crossed.push(o.jump_crossed);
        if o.tau_step >= 0 {
            liquidation_residuals.push(o.liq_residual);
        }
        decomposition_max_error = decomposition_max_error.max(o.decomp_error);
    }
    let pnl_est = McEstimate::from_sample(&pnl);
    let abs: Vec<f64> = pnl.iter().map(|x| x.abs()).collect();
    let abs_est = McEstimate::from_sample(&abs);
    let knocked = liquidation_residuals.len();
    let mean_liquidation_residual = if knocked == 0 {
        0.0
    } else {
        crate::stats::pairwise_sum(&liquidation_residuals) / knocked as f64
    };
    let max_liquidation_residual =
        liquidation_residuals.iter().copied().fold(0.0, f64::max);

    Ok(BacktestReport {
        n_paths: n,
        n_steps,
        seed,
        alpha,
        t0_value,
        mean_pnl: pnl_est.mean,
        pnl_stderr: pnl_est.stderr,
        mean_abs_pnl: abs_est.mean,
        abs_pnl_stderr: abs_est.stderr,
        knockout_fraction: knocked as f64 / n as f64,
        jump_cross_fraction: jump_crossed.iter().filter(|&&c| c).count() as f64 / n as f64,
        decomposition_max_error,
        mean_liquidation_residual,
        max_liquidation_residual,
        symmetry_warning: symmetry_warning(market, contract, alpha),
        pnl,
        tau_steps,
        jump_crossed,
        liquidation_residuals,
    })
}

#[allow(clippy::too_many_arguments)]
fn settle_path(
    market: &MarketSpec,
    sampler: &StepSampler,
    contract: &BarrierContract,
    euro: &PayoffSpec,
    refl: &PayoffSpec,
    carrying: &DVector<f64>,
    horizon: f64,
    n_steps: usize,
    dt: f64,
    poisson: Option<&rand_distr::Poisson<f64>>,
    valuation: &ValuationMode,
    notional: f64,
    seed: u64,
    path: u64,
) -> Result<PathOutcome> {
    let dim = sampler.dim();
    let spots = market.spots();
    let mut xi = vec![0.0; dim];
    let mut z = vec![0.0; dim];
    let mut state = vec![0.0; dim];
    let mut breach: Option<(usize, Vec<f64>, bool)> = None;
    for k in 1..=n_steps {
        let jumped = sampler.advance(dt, poisson, seed, path, k as u64, &mut xi, &mut z);
        let t = horizon * k as f64 / n_steps as f64;
        for l in 0..dim {
            state[l] = spots[l] * (carrying[l] * t + xi[l]).exp();
        }
        if breach.is_none() && contract.barrier_hit(&state) {
            let crossed = jumped && contract.strictly_beyond(&state);
            breach = Some((k, state.clone(), crossed));
        }
    }
    let euro_at_expiry = euro.evaluate(&state);
    let refl_at_expiry = refl.evaluate(&state);

    let outcome = match &breach {
        None => {
            let pnl = match contract.barrier_kind() {
                BarrierKind::KnockOut => -refl_at_expiry,
                BarrierKind::KnockIn => refl_at_expiry,
            };
            PathOutcome {
                pnl,
                tau_step: -1,
                jump_crossed: false,
                liq_residual: 0.0,
                decomp_error: euro_at_expiry_decomp_error(false, euro_at_expiry),
            }
        }
        Some((k, breach_state, crossed)) => {
            let (value_long, value_short) = if *k == n_steps {
                (euro_at_expiry, refl_at_expiry)
            } else {
                let remaining = horizon * (n_steps - k) as f64 / n_steps as f64;
                leg_values(
                    market, sampler, carrying, breach_state, remaining, euro, refl, valuation,
                    seed, path, *k as u64,
                )?
            };
            let pnl = match contract.barrier_kind() {
                BarrierKind::KnockOut => value_long - value_short,
                BarrierKind::KnockIn => value_short - value_long,
            };
            PathOutcome {
                pnl,
                tau_step: *k as i64,
                jump_crossed: *crossed,
                liq_residual: (value_long - value_short).abs() / notional,
                decomp_error: euro_at_expiry_decomp_error(true, euro_at_expiry),
            }
        }
    };
    if !outcome.pnl.is_finite() {
        return Err(Error::NonFinite(format!("path {path} produced a non-finite pnl")));
    }
    Ok(outcome)
}

/// `knock-out + knock-in = European` on every path: the two conditioned
/// payoffs partition on the breach indicator, so the residual is exactly
/// zero unless the monitoring logic is broken.
fn euro_at_expiry_decomp_error(breached: bool, euro_at_expiry: f64) -> f64 {
    let ko = if breached { 0.0 } else { euro_at_expiry };
    let ki = if breached { euro_at_expiry } else { 0.0 };
    (ko + ki - euro_at_expiry).abs()
}

fn leg_values(
    market: &MarketSpec,
    sampler: &StepSampler,
    carrying: &DVector<f64>,
    state: &[f64],
    remaining: f64,
    euro: &PayoffSpec,
    refl: &PayoffSpec,
    valuation: &ValuationMode,
    seed: u64,
    path: u64,
    step: u64,
) -> Result<(f64, f64)> {
    match valuation {
        ValuationMode::ClosedFormMargrabe => Ok((
            closed_form_value(market, state, remaining, euro)?,
            closed_form_value(market, state, remaining, refl)?,
        )),
        ValuationMode::NestedMc { inner } => {
            let mut rng = substream(seed, path, step, StreamPurpose::InnerValuation);
            let samples = nested_samples(
                sampler, carrying, state, remaining, &[euro, refl], *inner, &mut rng,
            )?;
            Ok((
                crate::stats::pairwise_sum(&samples[0]) / *inner as f64,
                crate::stats::pairwise_sum(&samples[1]) / *inner as f64,
            ))
        }
    }
}

fn portfolio_t0_value(
    market: &MarketSpec,
    sampler: &StepSampler,
    contract: &BarrierContract,
    euro: &PayoffSpec,
    refl: &PayoffSpec,
    valuation: &ValuationMode,
    seed: u64,
) -> Result<McEstimate> {
    let spots = market.spots().as_slice();
    let horizon = market.horizon();
    match valuation {
        ValuationMode::ClosedFormMargrabe => {
            let long = closed_form_value(market, spots, horizon, euro)?;
            let short = closed_form_value(market, spots, horizon, refl)?;
            let mean = match contract.barrier_kind() {
                BarrierKind::KnockOut => long - short,
                BarrierKind::KnockIn => short,
            };
            Ok(McEstimate { mean, stderr: 0.0, n: 0 })
        }
        ValuationMode::NestedMc { inner } => {
            // Reserved stream key so inception marking never shares draws
            // with a path's liquidation valuation.
            let mut rng = substream(seed, u64::MAX, 0, StreamPurpose::InnerValuation);
            let samples = nested_samples(
                sampler,
                market.carrying_costs(),
                spots,
                horizon,
                &[euro, refl],
                *inner,
                &mut rng,
            )?;
            match contract.barrier_kind() {
                BarrierKind::KnockOut => {
                    let diffs: Vec<f64> =
                        samples[0].iter().zip(&samples[1]).map(|(a, b)| a - b).collect();
                    Ok(McEstimate::from_sample(&diffs))
                }
                BarrierKind::KnockIn => Ok(McEstimate::from_sample(&samples[1])),
            }
        }
    }
}

/// Structural check of the symmetry each contract family relies on; returns
/// a human-readable warning when the model does not satisfy it.
fn symmetry_warning(
    market: &MarketSpec,
    contract: &BarrierContract,
    alpha: f64,
) -> Option<String> {
    let t = market.triplet();
    let lam = market.carrying_costs();
    let tol = defaults::STRUCTURAL_TOL;
    let carrying_gap = (lam[0] - lam[1]).abs();
    let need_equal_carrying = |label: &str| {
        if carrying_gap > tol {
            Some(format!(
                "{label} replication needs equal carrying costs on the hedged pair; \
                 the gap is {carrying_gap:.3e}"
            ))
        } else {
            None
        }
    };
    match contract.payoff_kind() {
        BarrierPayoffKind::Spread { .. } | BarrierPayoffKind::QuantoSpread { .. } => {
            match check_exchangeable(t, 0, 1, tol) {
                Ok(r) if r.pass => need_equal_carrying("cash-strike"),
                Ok(r) => Some(format!(
                    "model is not exchangeable in the hedged pair \
                     (max residual {:.3e}); cash-strike legs are not value-matched \
                     at the barrier",
                    r.max_residual()
                )),
                Err(e) => Some(format!("exchangeability check failed: {e}")),
            }
        }
        BarrierPayoffKind::Swap { .. } if alpha == 0.0 => {
            match check_swap_invariant(t, 0, 1, None, tol) {
                Ok(r) if r.pass => need_equal_carrying("swap"),
                Ok(r) => Some(format!(
                    "model is not swap-invariant in the hedged pair \
                     (max residual {:.3e})",
                    r.max_residual()
                )),
                Err(e) => Some(format!("swap-invariance check failed: {e}")),
            }
        }
        BarrierPayoffKind::Swap { .. } => {
            let rates = (market.asset_rate(0), market.asset_rate(1));
            match check_quasi_swap_invariant(t, 0, 1, alpha, rates, false, tol) {
                Ok(r) if r.pass => None,
                Ok(r) => Some(format!(
                    "model is not quasi-swap-invariant at power {alpha} \
                     (max residual {:.3e})",
                    r.max_residual()
                )),
                Err(e) => Some(format!("quasi-invariance check failed: {e}")),
            }
        }
        BarrierPayoffKind::QuantoSwap { .. } => {
            match check_weighted_swap_invariant(t, 0, 1, tol) {
                Ok(r) if r.pass => need_equal_carrying("quanto swap"),
                Ok(r) => Some(format!(
                    "model is not swap-invariant under the quanto weight \
                     (max residual {:.3e})",
                    r.max_residual()
                )),
                Err(e) => Some(format!("weighted swap-invariance check failed: {e}")),
            }
        }
    }
}

/// Both hedge legs valued at a barrier state from common one-step draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueIdentityReport {
    pub n_paths: usize,
    pub seed: u64,
    pub long_value: McEstimate,
    pub short_value: McEstimate,
    /// Paired per-draw difference `long - short`.
    pub difference: McEstimate,
    /// Standardized paired difference.
    pub z: f64,
    /// `|long - short| / max(|long|, |short|)`.
    pub relative_difference: f64,
}

/// Check that the original and reflected claims have equal conditional
/// forward value at a state on the barrier, by common-random-number
/// simulation over the remaining horizon.
pub fn barrier_value_identity(
    market: &MarketSpec,
    contract: &BarrierContract,
    alpha: f64,
    state: &[f64],
    remaining: f64,
    n_paths: usize,
    seed: u64,
) -> Result<ValueIdentityReport> {
    let dim = market.dim();
    let euro = contract.european_payoff(dim)?;
    let refl = contract.reflected_payoff(dim, alpha)?;
    if state.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "state has {} entries, model dimension is {dim}",
            state.len()
        )));
    }
    let gap = (contract.scale() * state[0] - state[1]).abs();
    if gap > 1e-9 * state[1].abs() {
        return Err(Error::InvalidArgument(format!(
            "state must lie on the barrier: scale * s1 = {}, s2 = {}",
            contract.scale() * state[0],
            state[1]
        )));
    }
    if n_paths < 2 {
        return Err(Error::InvalidArgument("need at least two paths".into()));
    }
    let sampler = StepSampler::new(market)?;
    let mut rng = substream(seed, 0, 0, StreamPurpose::InnerValuation);
    let samples = nested_samples(
        &sampler,
        market.carrying_costs(),
        state,
        remaining,
        &[&euro, &refl],
        n_paths,
        &mut rng,
    )?;
    let long_value = McEstimate::from_sample(&samples[0]);
    let short_value = McEstimate::from_sample(&samples[1]);
    let diffs: Vec<f64> = samples[0].iter().zip(&samples[1]).map(|(a, b)| a - b).collect();
    let (difference, z) = paired_z(&diffs);
    let denom = long_value.mean.abs().max(short_value.mean.abs());
    let relative_difference =
        if denom > 0.0 { (long_value.mean - short_value.mean).abs() / denom } else { 0.0 };
    Ok(ValueIdentityReport {
        n_paths,
        seed,
        long_value,
        short_value,
        difference,
        z,
        relative_difference,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n_steps: usize,
    pub mean_abs_pnl: f64,
    pub abs_pnl_stderr: f64,
    pub mean_pnl: f64,
    pub pnl_stderr: f64,
    pub knockout_fraction: f64,
}

/// Backtest the same contract at increasing monitoring frequencies.
pub fn convergence_study(
    market: &MarketSpec,
    contract: &BarrierContract,
    alpha: f64,
    steps_list: &[usize],
    n_paths: usize,
    seed: u64,
    valuation: ValuationMode,
) -> Result<Vec<ConvergenceRow>> {
    if steps_list.is_empty() {
        return Err(Error::InvalidArgument("need at least one monitoring frequency".into()));
    }
    if !steps_list.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument(
            "monitoring frequencies must be strictly increasing".into(),
        ));
    }
    steps_list
        .iter()
        .map(|&n_steps| {
            let config = BacktestConfig { n_paths, n_steps, seed, valuation };
            let r = run_backtest(market, contract, alpha, &config)?;
            Ok(ConvergenceRow {
                n_steps,
                mean_abs_pnl: r.mean_abs_pnl,
                abs_pnl_stderr: r.abs_pnl_stderr,
                mean_pnl: r.mean_pnl,
                pnl_stderr: r.pnl_stderr,
                knockout_fraction: r.knockout_fraction,
            })
        })
        .collect()
}

/// Long-format per-path results: `path,tau_step,pnl,jump_crossed`.
pub fn write_pnl_csv<W: std::io::Write>(
    report: &BacktestReport,
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(out, "path,tau_step,pnl,jump_crossed")?;
    for p in 0..report.n_paths {
        writeln!(
            out,
            "{},{},{},{}",
            p, report.tau_steps[p], report.pnl[p], report.jump_crossed[p]
        )?;
    }
    Ok(())
}
