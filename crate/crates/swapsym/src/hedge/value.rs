//! Conditional forward valuation of European legs.
//!
//! Both valuers return the undiscounted conditional expectation of the
//! payoff at expiry given current prices and the remaining horizon. The
//! closed form covers pure-diffusion models and payoffs of exchange type:
//! one positive and one negative weight, zero strike, optionally multiplied
//! by a price-ratio power or a third asset's price. The nested Monte Carlo
//! valuer covers every supported payoff and model, at simulation cost.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::MarketSpec;
use crate::rng::{substream, StreamPurpose};
use crate::sim::engine::StepSampler;
use crate::sim::payoff::PayoffSpec;
use crate::stats::{normal_cdf, McEstimate};

/// How intermediate leg values are computed during a backtest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ValuationMode {
    /// Exact exchange-option formula; pure-diffusion models and zero-strike
    /// two-asset legs only.
    ClosedFormMargrabe,
    /// Inner simulation restarted from the liquidation state.
    NestedMc {
        #[serde(default = "default_inner")]
        inner: usize,
    },
}

fn default_inner() -> usize {
    crate::defaults::INNER_PATHS
}

impl Default for ValuationMode {
    fn default() -> Self {
        ValuationMode::NestedMc { inner: default_inner() }
    }
}

/// Exchange representation `W * (X - Y)_+` of a payoff: `X = wp * S_p`,
/// `Y = wq * S_q`, and `ln W = <factor, ln S>`.
struct ExchangeForm {
    p: usize,
    wp: f64,
    q: usize,
    wq: f64,
    factor: Vec<f64>,
}

fn exchange_form(payoff: &PayoffSpec, dim: usize) -> Result<ExchangeForm> {
    payoff.validate(dim)?;
    let strike = match payoff {
        PayoffSpec::Basket { strike, .. } | PayoffSpec::Quanto { strike, .. } => *strike,
        PayoffSpec::ZeroStrikeBasket { .. } | PayoffSpec::PowerWeighted { .. } => 0.0,
    };
    if strike != 0.0 {
        return Err(Error::InvalidArgument(
            "closed form needs a zero strike; use nested simulation for cash strikes".into(),
        ));
    }
    let mut pos = None;
    let mut neg = None;
    for (l, &w) in payoff.weights().iter().enumerate() {
        if w > 0.0 {
            if pos.replace((l, w)).is_some() {
                return Err(Error::InvalidArgument(
                    "closed form needs exactly one positive weight".into(),
                ));
            }
        } else if w < 0.0 {
            if neg.replace((l, -w)).is_some() {
                return Err(Error::InvalidArgument(
                    "closed form needs exactly one negative weight".into(),
                ));
            }
        }
    }
    let (Some((p, wp)), Some((q, wq))) = (pos, neg) else {
        return Err(Error::InvalidArgument(
            "closed form needs one positive and one negative weight".into(),
        ));
    };
    let mut factor = vec![0.0; dim];
    match payoff {
        PayoffSpec::Quanto { factor: idx, .. } => factor[*idx] += 1.0,
        PayoffSpec::PowerWeighted { i, j, alpha, .. } => {
            factor[*i] += alpha;
            factor[*j] -= alpha;
        }
        _ => {}
    }
    Ok(ExchangeForm { p, wp, q, wq, factor })
}

fn check_state(state: &[f64], dim: usize, remaining: f64) -> Result<()> {
    if state.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "state has {} entries, model dimension is {dim}",
            state.len()
        )));
    }
    if !state.iter().all(|s| *s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument("state prices must be positive and finite".into()));
    }
    if !(remaining >= 0.0 && remaining.is_finite()) {
        return Err(Error::InvalidArgument("remaining horizon must be nonnegative".into()));
    }
    Ok(())
}

/// Exact conditional forward value of an exchange-type payoff under a
/// pure-diffusion model.
///
/// With log prices jointly Gaussian over the remaining horizon, writes the
/// payoff as `W (X - Y)_+` and evaluates
/// `E[W X] Phi(d_X) - E[W Y] Phi(d_Y)` where `D = ln X - ln Y` and
/// `d_Z = (E D + Cov(D, ln W + ln Z)) / sd(D)`. With two plain weights and
/// `W = 1` this reduces to the classical two-asset exchange-option formula.
pub fn closed_form_value(
    market: &MarketSpec,
    state: &[f64],
    remaining: f64,
    payoff: &PayoffSpec,
) -> Result<f64> {
    let dim = market.dim();
    check_state(state, dim, remaining)?;
    if !market.triplet().nu().is_zero() {
        return Err(Error::InvalidArgument(
            "closed form covers pure-diffusion models; use nested simulation for jumps".into(),
        ));
    }
    let form = exchange_form(payoff, dim)?;

    let a = market.triplet().a();
    let gamma = market.triplet().gamma();
    let lam = market.carrying_costs();
    // Mean log growth of each asset over the remaining horizon.
    let mu: Vec<f64> = (0..dim).map(|l| (lam[l] + gamma[l]) * remaining).collect();

    let cx = (form.wp * state[form.p]).ln() + mu[form.p];
    let cy = (form.wq * state[form.q]).ln() + mu[form.q];
    let mut cw = 0.0;
    for l in 0..dim {
        if form.factor[l] != 0.0 {
            cw += form.factor[l] * (state[l].ln() + mu[l]);
        }
    }

    let mut vx = DVector::zeros(dim);
    vx[form.p] = 1.0;
    let mut vy = DVector::zeros(dim);
    vy[form.q] = 1.0;
    let vw = DVector::from_row_slice(&form.factor);
    let quad = |u: &DVector<f64>, v: &DVector<f64>| u.dot(&(a * v)) * remaining;

    let wx = &vw + &vx;
    let wy = &vw + &vy;
    let e_wx = (cw + cx + 0.5 * quad(&wx, &wx)).exp();
    let e_wy = (cw + cy + 0.5 * quad(&wy, &wy)).exp();
    let diff = &vx - &vy;
    let mu_d = cx - cy;
    let var_d = quad(&diff, &diff);
    let value = if var_d <= 0.0 {
        // Deterministic log ratio: the option is exercised iff `E D > 0`.
        if mu_d > 0.0 {
            e_wx - e_wy
        } else {
            0.0
        }
    } else {
        let sd = var_d.sqrt();
        let dx = (mu_d + quad(&diff, &wx)) / sd;
        let dy = (mu_d + quad(&diff, &wy)) / sd;
        e_wx * normal_cdf(dx) - e_wy * normal_cdf(dy)
    };
    if !value.is_finite() {
        return Err(Error::NonFinite("closed-form value overflowed".into()));
    }
    Ok(value)
}

/// Per-draw payoff samples from terminal states resimulated over the
/// remaining horizon, sharing one set of draws across all payoffs so their
/// differences are estimated with common random numbers.
pub(crate) fn nested_samples<R: Rng + ?Sized>(
    sampler: &StepSampler,
    carrying: &DVector<f64>,
    state: &[f64],
    remaining: f64,
    payoffs: &[&PayoffSpec],
    inner: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let dim = sampler.dim();
    check_state(state, dim, remaining)?;
    for payoff in payoffs {
        payoff.validate(dim)?;
    }
    if inner < 2 {
        return Err(Error::InvalidArgument("need at least two inner samples".into()));
    }
    let poisson = sampler.poisson(remaining)?;
    let mut xi = vec![0.0; dim];
    let mut z = vec![0.0; dim];
    let mut terminal = vec![0.0; dim];
    let mut samples: Vec<Vec<f64>> = payoffs.iter().map(|_| Vec::with_capacity(inner)).collect();
    for _ in 0..inner {
        xi.fill(0.0);
        sampler.advance_one_stream(remaining, poisson.as_ref(), rng, &mut xi, &mut z);
        for l in 0..dim {
            terminal[l] = state[l] * (carrying[l] * remaining + xi[l]).exp();
        }
        for (payoff, out) in payoffs.iter().zip(samples.iter_mut()) {
            out.push(payoff.evaluate(&terminal));
        }
    }
    Ok(samples)
}

/// Estimate conditional forward values of several payoffs from the same
/// inner draws; see [`nested_samples`].
pub(crate) fn nested_values_with<R: Rng + ?Sized>(
    sampler: &StepSampler,
    carrying: &DVector<f64>,
    state: &[f64],
    remaining: f64,
    payoffs: &[&PayoffSpec],
    inner: usize,
    rng: &mut R,
) -> Result<Vec<McEstimate>> {
    let samples = nested_samples(sampler, carrying, state, remaining, payoffs, inner, rng)?;
    Ok(samples.iter().map(|s| McEstimate::from_sample(s)).collect())
}

/// Estimate the conditional forward value of one payoff by inner simulation.
/// The stream is keyed by `(seed, path, step)` so results are independent of
/// scheduling and reproducible.
pub fn nested_value(
    market: &MarketSpec,
    state: &[f64],
    remaining: f64,
    payoff: &PayoffSpec,
    inner: usize,
    seed: u64,
    path: u64,
    step: u64,
) -> Result<McEstimate> {
    let sampler = StepSampler::new(market)?;
    let mut rng = substream(seed, path, step, StreamPurpose::InnerValuation);
    let values = nested_values_with(
        &sampler,
        market.carrying_costs(),
        state,
        remaining,
        &[payoff],
        inner,
        &mut rng,
    )?;
    Ok(values.into_iter().next().expect("one payoff requested"))
}
