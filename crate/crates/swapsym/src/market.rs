//! Market layer on top of a characteristic triplet: spot (forward) prices,
//! carrying-cost drifts, horizon, and an optional multiplicative weight.
//!
//! Prices are `S_{t,l} = spot_l * exp(lambda_l t + xi_{t,l})` where `lambda`
//! collects the carrying costs `lambda_l = rate - r_l`. Price relatives
//! `S_{t,l} / spot_l` are what the symmetry statements are about.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::triplet::LevyTriplet;

/// Multiplicative weight attached to expectations in weighted symmetry
/// statements and payoffs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKind {
    /// Unweighted expectations.
    None,
    /// The last coordinate of the triplet is the log-weight; assets are the
    /// first `dim - 1` coordinates.
    LastCoordinate,
    /// Weight `exp(<v, xi_T>)` with an explicit vector over all coordinates.
    Linear { v: Vec<f64> },
}

/// A complete market model: dynamics plus the static quantities needed to
/// turn the log-price process into asset prices.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketSpec {
    triplet: LevyTriplet,
    spots: DVector<f64>,
    carrying_costs: DVector<f64>,
    horizon: f64,
    weight: WeightKind,
    rate: f64,
}

impl MarketSpec {
    pub fn new(
        triplet: LevyTriplet,
        spots: DVector<f64>,
        carrying_costs: DVector<f64>,
        horizon: f64,
        weight: WeightKind,
        rate: f64,
    ) -> Result<Self> {
        let dim = triplet.dim();
        if spots.len() != dim || carrying_costs.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "spots ({}) and carrying costs ({}) must match triplet dimension {dim}",
                spots.len(),
                carrying_costs.len()
            )));
        }
        if !spots.iter().all(|&s| s.is_finite() && s > 0.0) {
            return Err(Error::InvalidMarket("spots must be strictly positive".into()));
        }
        if !carrying_costs.iter().all(|&c| c.is_finite()) || !rate.is_finite() {
            return Err(Error::InvalidMarket("rates must be finite".into()));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidMarket("horizon must be positive".into()));
        }
        match &weight {
            WeightKind::LastCoordinate if dim < 2 => {
                return Err(Error::InvalidMarket(
                    "a weight coordinate requires dimension at least 2".into(),
                ));
            }
            WeightKind::Linear { v } if v.len() != dim => {
                return Err(Error::DimensionMismatch(format!(
                    "weight vector has length {}, triplet dimension is {dim}",
                    v.len()
                )));
            }
            _ => {}
        }
        Ok(MarketSpec { triplet, spots, carrying_costs, horizon, weight, rate })
    }

    /// Market with zero carrying costs, no weight and zero discount rate.
    pub fn simple(triplet: LevyTriplet, spots: DVector<f64>, horizon: f64) -> Result<Self> {
        let dim = triplet.dim();
        MarketSpec::new(triplet, spots, DVector::zeros(dim), horizon, WeightKind::None, 0.0)
    }

    pub fn triplet(&self) -> &LevyTriplet {
        &self.triplet
    }

    pub fn spots(&self) -> &DVector<f64> {
        &self.spots
    }

    pub fn carrying_costs(&self) -> &DVector<f64> {
        &self.carrying_costs
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn weight(&self) -> &WeightKind {
        &self.weight
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn dim(&self) -> usize {
        self.triplet.dim()
    }

    /// Number of tradable assets: all coordinates, or all but the weight
    /// coordinate.
    pub fn n_assets(&self) -> usize {
        match self.weight {
            WeightKind::LastCoordinate => self.dim() - 1,
            _ => self.dim(),
        }
    }

    /// Per-asset rate `r_l = rate - lambda_l`.
    pub fn asset_rate(&self, l: usize) -> f64 {
        self.rate - self.carrying_costs[l]
    }

    /// Copy with a different horizon.
    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        MarketSpec::new(
            self.triplet.clone(),
            self.spots.clone(),
            self.carrying_costs.clone(),
            horizon,
            self.weight.clone(),
            self.rate,
        )
    }

    /// Copy with different spots (same dynamics); used to value claims from
    /// an intermediate state.
    pub fn with_spots(&self, spots: DVector<f64>) -> Result<Self> {
        MarketSpec::new(
            self.triplet.clone(),
            spots,
            self.carrying_costs.clone(),
            self.horizon,
            self.weight.clone(),
            self.rate,
        )
    }
}

#[derive(Serialize, Deserialize)]
struct RawMarket {
    triplet: LevyTriplet,
    spots: Vec<f64>,
    carrying_costs: Vec<f64>,
    horizon: f64,
    weight: WeightKind,
    #[serde(default)]
    rate: f64,
}

impl Serialize for MarketSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        RawMarket {
            triplet: self.triplet.clone(),
            spots: self.spots.as_slice().to_vec(),
            carrying_costs: self.carrying_costs.as_slice().to_vec(),
            horizon: self.horizon,
            weight: self.weight.clone(),
            rate: self.rate,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MarketSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawMarket::deserialize(deserializer)?;
        MarketSpec::new(
            raw.triplet,
            DVector::from_vec(raw.spots),
            DVector::from_vec(raw.carrying_costs),
            raw.horizon,
            raw.weight,
            raw.rate,
        )
        .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::LevyMeasure;
    use nalgebra::DMatrix;

    fn triplet2() -> LevyTriplet {
        let a = DMatrix::from_row_slice(2, 2, &[0.04, 0.01, 0.01, 0.09]);
        LevyTriplet::with_martingale_drift(a, LevyMeasure::zero(2)).unwrap()
    }

    #[test]
    fn validation_rejects_bad_markets() {
        let t = triplet2();
        assert!(MarketSpec::new(
            t.clone(),
            DVector::from_row_slice(&[100.0, -1.0]),
            DVector::zeros(2),
            1.0,
            WeightKind::None,
            0.0
        )
        .is_err());
        assert!(MarketSpec::new(
            t.clone(),
            DVector::from_row_slice(&[100.0, 100.0]),
            DVector::zeros(2),
            0.0,
            WeightKind::None,
            0.0
        )
        .is_err());
        assert!(MarketSpec::new(
            t.clone(),
            DVector::from_row_slice(&[100.0, 100.0]),
            DVector::zeros(2),
            1.0,
            WeightKind::Linear { v: vec![1.0] },
            0.0
        )
        .is_err());
        assert!(MarketSpec::simple(t, DVector::from_row_slice(&[100.0, 95.0]), 1.0).is_ok());
    }

    #[test]
    fn asset_rates_come_from_rate_minus_carrying_cost() {
        let t = triplet2();
        let m = MarketSpec::new(
            t,
            DVector::from_row_slice(&[100.0, 100.0]),
            DVector::from_row_slice(&[0.02, -0.01]),
            2.0,
            WeightKind::None,
            0.03,
        )
        .unwrap();
        assert!((m.asset_rate(0) - 0.01).abs() < 1e-15);
        assert!((m.asset_rate(1) - 0.04).abs() < 1e-15);
        assert_eq!(m.n_assets(), 2);
    }

    #[test]
    fn serde_round_trip_is_exact() {
        let t = triplet2();
        let m = MarketSpec::new(
            t,
            DVector::from_row_slice(&[101.25, 99.5]),
            DVector::from_row_slice(&[0.01, 0.005]),
            0.75,
            WeightKind::Linear { v: vec![0.5, 0.5] },
            0.02,
        )
        .unwrap();
        let json = serde_json::to_string(&m).unwrap();
        let back: MarketSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn weight_coordinate_reduces_asset_count() {
        let a = DMatrix::from_row_slice(3, 3, &[0.04, 0.0, 0.0, 0.0, 0.09, 0.0, 0.0, 0.0, 0.02]);
        let t = LevyTriplet::with_martingale_drift(a, LevyMeasure::zero(3)).unwrap();
        let m = MarketSpec::new(
            t,
            DVector::from_row_slice(&[100.0, 100.0, 1.0]),
            DVector::zeros(3),
            1.0,
            WeightKind::LastCoordinate,
            0.0,
        )
        .unwrap();
        assert_eq!(m.n_assets(), 2);
    }
}
