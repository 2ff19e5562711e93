//! Barrier contracts on an asset pair and their semi-static hedge
//! portfolios.
//!
//! All contracts monitor the event `c * S_1 <= S_2` (assets indexed 0 and 1
//! internally). A knock-out claim pays its European payoff at expiry only if
//! the event never occurred; a knock-in claim pays only if it did. The hedge
//! trades European claims at most twice: at inception and at the first
//! monitoring time the barrier is breached, where the original and the
//! reflected claim have equal model value under the matching distributional
//! symmetry.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::payoff::PayoffSpec;

/// European payoff family of a barrier contract. Spread kinds carry a cash
/// strike `k` and therefore require pair exchangeability of the model;
/// swap kinds are one-homogeneous and only need (weighted / power-corrected)
/// swap-invariance. Quanto kinds multiply by the third asset's price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BarrierPayoffKind {
    Spread { a: f64, b: f64, k: f64 },
    Swap { a: f64, b: f64 },
    QuantoSpread { a: f64, b: f64, k: f64 },
    QuantoSwap { a: f64, b: f64 },
}

impl BarrierPayoffKind {
    fn parameters(&self) -> (f64, f64, f64) {
        match *self {
            BarrierPayoffKind::Spread { a, b, k } => (a, b, k),
            BarrierPayoffKind::Swap { a, b } => (a, b, 0.0),
            BarrierPayoffKind::QuantoSpread { a, b, k } => (a, b, k),
            BarrierPayoffKind::QuantoSwap { a, b } => (a, b, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierKind {
    KnockOut,
    KnockIn,
}

/// A knock-out or knock-in claim on the event `c * S_1 <= S_2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BarrierContract {
    payoff: BarrierPayoffKind,
    barrier: BarrierKind,
    /// Barrier scale `c`.
    scale: f64,
}

#[derive(Deserialize)]
struct RawContract {
    payoff: BarrierPayoffKind,
    barrier: BarrierKind,
    scale: f64,
}

impl<'de> Deserialize<'de> for BarrierContract {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawContract::deserialize(deserializer)?;
        BarrierContract::new(raw.payoff, raw.barrier, raw.scale).map_err(serde::de::Error::custom)
    }
}

impl BarrierContract {
    /// Validates positivity and the worthless-short-leg condition
    /// `0 < a <= b * c`: on surviving paths `c * S_1 > S_2` at expiry, so
    /// `(a/c) S_2 - b c S_1 < (a - b c) S_1 <= 0` and the reflected claim
    /// expires worthless.
    pub fn new(payoff: BarrierPayoffKind, barrier: BarrierKind, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidContract("barrier scale must be positive".into()));
        }
        let (a, b, k) = payoff.parameters();
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidContract("weights a, b must be positive".into()));
        }
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::InvalidContract("strike k must be nonnegative".into()));
        }
        if a > b * scale {
            return Err(Error::InvalidContract(format!(
                "need a <= b * c for a worthless short leg at expiry; got a = {a}, b * c = {}",
                b * scale
            )));
        }
        Ok(BarrierContract { payoff, barrier, scale })
    }

    pub fn payoff_kind(&self) -> BarrierPayoffKind {
        self.payoff
    }

    pub fn barrier_kind(&self) -> BarrierKind {
        self.barrier
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_quanto(&self) -> bool {
        matches!(
            self.payoff,
            BarrierPayoffKind::QuantoSpread { .. } | BarrierPayoffKind::QuantoSwap { .. }
        )
    }

    pub fn has_strike(&self) -> bool {
        let (_, _, k) = self.payoff.parameters();
        k > 0.0
    }

    /// Assets the contract reads: the monitored pair plus the quanto factor.
    pub fn required_assets(&self) -> usize {
        if self.is_quanto() {
            3
        } else {
            2
        }
    }

    /// Price scale used to normalize liquidation residuals.
    pub fn notional(&self, spots: &[f64]) -> f64 {
        let (a, _, _) = self.payoff.parameters();
        let base = a * spots[0];
        if self.is_quanto() {
            base * spots[2]
        } else {
            base
        }
    }

    pub fn barrier_hit(&self, state: &[f64]) -> bool {
        self.scale * state[0] <= state[1]
    }

    pub fn strictly_beyond(&self, state: &[f64]) -> bool {
        self.scale * state[0] < state[1]
    }

    /// The unconditioned European payoff of the contract.
    pub fn european_payoff(&self, dim: usize) -> Result<PayoffSpec> {
        self.check_dim(dim)?;
        let (a, b, k) = self.payoff.parameters();
        let mut weights = vec![0.0; dim];
        weights[0] = a;
        weights[1] = -b;
        Ok(match self.payoff {
            BarrierPayoffKind::Spread { .. } => PayoffSpec::Basket { weights, strike: -k },
            BarrierPayoffKind::Swap { .. } => PayoffSpec::ZeroStrikeBasket { weights },
            BarrierPayoffKind::QuantoSpread { .. } => {
                PayoffSpec::Quanto { weights, strike: -k, factor: 2 }
            }
            BarrierPayoffKind::QuantoSwap { .. } => {
                PayoffSpec::Quanto { weights, strike: 0.0, factor: 2 }
            }
        })
    }

    /// The reflected claim: pair weights swapped and adjusted for the
    /// barrier scale (`a/c` on asset 2, `b*c` on asset 1), strike unchanged,
    /// with the power factor `(S_1/S_2)^alpha` attached for `alpha != 0`.
    pub fn reflected_payoff(&self, dim: usize, alpha: f64) -> Result<PayoffSpec> {
        self.check_dim(dim)?;
        if !alpha.is_finite() {
            return Err(Error::NonFinite("power correction must be finite".into()));
        }
        let (a, b, k) = self.payoff.parameters();
        let mut weights = vec![0.0; dim];
        weights[0] = -b * self.scale;
        weights[1] = a / self.scale;
        if alpha == 0.0 {
            return Ok(match self.payoff {
                BarrierPayoffKind::Spread { .. } => PayoffSpec::Basket { weights, strike: -k },
                BarrierPayoffKind::Swap { .. } => PayoffSpec::ZeroStrikeBasket { weights },
                BarrierPayoffKind::QuantoSpread { .. } => {
                    PayoffSpec::Quanto { weights, strike: -k, factor: 2 }
                }
                BarrierPayoffKind::QuantoSwap { .. } => {
                    PayoffSpec::Quanto { weights, strike: 0.0, factor: 2 }
                }
            });
        }
        match self.payoff {
            BarrierPayoffKind::Swap { .. } => {
                Ok(PayoffSpec::PowerWeighted { weights, i: 0, j: 1, alpha })
            }
            _ => Err(Error::InvalidContract(
                "power correction applies to plain swap contracts only; \
                 spreads need pair exchangeability and the quanto weight \
                 would require a combined factor"
                    .into(),
            )),
        }
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        // Quanto contracts read the factor as the third and last coordinate,
        // so the model must have exactly three.
        let ok = if self.is_quanto() { dim == 3 } else { dim >= 2 };
        if !ok {
            return Err(Error::DimensionMismatch(format!(
                "contract needs {} assets{}, market has {dim}",
                self.required_assets(),
                if self.is_quanto() { " exactly" } else { "" }
            )));
        }
        Ok(())
    }
}

/// European legs replicating a barrier contract semi-statically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgePortfolio {
    /// Held long from inception.
    pub long: PayoffSpec,
    /// Written at inception (knock-out hedges only).
    pub short: Option<PayoffSpec>,
    /// Power correction baked into the reflected leg.
    pub alpha: f64,
}

/// Long original + short reflected for knock-out claims; long reflected only
/// for knock-in claims.
pub fn build_hedge(contract: &BarrierContract, dim: usize, alpha: f64) -> Result<HedgePortfolio> {
    let european = contract.european_payoff(dim)?;
    let reflected = contract.reflected_payoff(dim, alpha)?;
    Ok(match contract.barrier_kind() {
        BarrierKind::KnockOut => {
            HedgePortfolio { long: european, short: Some(reflected), alpha }
        }
        BarrierKind::KnockIn => HedgePortfolio { long: reflected, short: None, alpha },
    })
}
