//! European payoff functions over a vector of asset prices (or price
//! relatives; the payoffs are homogeneous in whatever values are supplied).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A payoff evaluated on terminal values `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PayoffSpec {
    /// `(<weights, s> + strike)_+`; the strike slot is signed.
    Basket { weights: Vec<f64>, strike: f64 },
    /// `(<weights, s>)_+`.
    ZeroStrikeBasket { weights: Vec<f64> },
    /// `s[factor] * (<weights, s> + strike)_+`.
    Quanto { weights: Vec<f64>, strike: f64, factor: usize },
    /// `(s[i]/s[j])^alpha * (<weights, s>)_+`.
    PowerWeighted { weights: Vec<f64>, i: usize, j: usize, alpha: f64 },
}

impl PayoffSpec {
    pub fn weights(&self) -> &[f64] {
        match self {
            PayoffSpec::Basket { weights, .. }
            | PayoffSpec::ZeroStrikeBasket { weights }
            | PayoffSpec::Quanto { weights, .. }
            | PayoffSpec::PowerWeighted { weights, .. } => weights,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights().len()
    }

    /// Check internal indices against the number of assets the payoff will
    /// be evaluated on.
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch(format!(
                "payoff has {} weights, values have dimension {dim}",
                self.dim()
            )));
        }
        if !self.weights().iter().all(|w| w.is_finite()) {
            return Err(Error::InvalidArgument("payoff weights must be finite".into()));
        }
        match self {
            PayoffSpec::Basket { strike, .. } | PayoffSpec::Quanto { strike, .. }
                if !strike.is_finite() =>
            {
                Err(Error::InvalidArgument("strike must be finite".into()))
            }
            PayoffSpec::Quanto { factor, .. } if *factor >= dim => {
                Err(Error::DimensionMismatch(format!(
                    "quanto factor index {factor} out of range for dimension {dim}"
                )))
            }
            PayoffSpec::PowerWeighted { i, j, alpha, .. }
                if *i >= dim || *j >= dim || i == j || !alpha.is_finite() =>
            {
                Err(Error::InvalidArgument(
                    "power factor needs two distinct in-range indices and a finite power".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    /// Evaluate on `values`; `values.len()` must equal the weight count.
    pub fn evaluate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.dim());
        let basket: f64 = self
            .weights()
            .iter()
            .zip(values.iter())
            .map(|(w, s)| w * s)
            .sum();
        match self {
            PayoffSpec::Basket { strike, .. } => (basket + strike).max(0.0),
            PayoffSpec::ZeroStrikeBasket { .. } => basket.max(0.0),
            PayoffSpec::Quanto { strike, factor, .. } => {
                values[*factor] * (basket + strike).max(0.0)
            }
            PayoffSpec::PowerWeighted { i, j, alpha, .. } => {
                (values[*i] / values[*j]).powf(*alpha) * basket.max(0.0)
            }
        }
    }

    /// Copy with the weight entries `i` and `j` exchanged. Only the weight
    /// vector is swapped; factor indices and power indices are untouched,
    /// matching how the swap acts in the symmetry statements.
    pub fn swap_weights(&self, i: usize, j: usize) -> PayoffSpec {
        let mut out = self.clone();
        match &mut out {
            PayoffSpec::Basket { weights, .. }
            | PayoffSpec::ZeroStrikeBasket { weights }
            | PayoffSpec::Quanto { weights, .. }
            | PayoffSpec::PowerWeighted { weights, .. } => weights.swap(i, j),
        }
        out
    }
}
