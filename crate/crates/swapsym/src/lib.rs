//! Symmetry analysis and semi-static hedging for exponential-Levy market
//! models.
//!
//! The crate decides, directly from a characteristic triplet `(A, nu, gamma)`,
//! whether a market model is exchangeable, swap-invariant (plainly, under a
//! multiplicative weight, or only up to a power factor with carrying costs),
//! or self-dual; solves for the quasi-invariance power; simulates paths
//! exactly; and backtests semi-static barrier-option hedges whose validity
//! rests on those symmetries.
//!
//! Entry points:
//!
//! * [`triplet::LevyTriplet`] / [`measure::LevyMeasure`] — model dynamics
//!   with closed-form exponential moments and complex characteristic
//!   exponents;
//! * [`symmetry`] / [`quasi`] — structural and characteristic-function
//!   checks, the power solver;
//! * [`construct`] — randomized builders of models with prescribed
//!   symmetries;
//! * [`market::MarketSpec`] — spots, carrying costs, horizon, weights;
//! * [`sim`] — exact-transition Monte-Carlo engine, payoffs, statistical
//!   symmetry tests;
//! * [`hedge`] — barrier contracts, hedge portfolios, backtests.

pub mod construct;
pub mod error;
pub mod exec;
pub mod hedge;
pub mod linalg;
pub mod market;
pub mod measure;
pub mod quasi;
pub mod report;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod symmetry;
pub mod triplet;

pub use error::{Error, Result};

/// Library-wide default tolerances and sizes, used by the CLI and tests.
pub mod defaults {
    /// Absolute tolerance for structural (triplet) residuals.
    pub const STRUCTURAL_TOL: f64 = crate::symmetry::STRUCTURAL_TOL;
    /// Absolute tolerance for characteristic-function grid residuals.
    pub const CHARFN_TOL: f64 = crate::symmetry::CHARFN_TOL;
    /// Default seed for every randomized computation.
    pub const SEED: u64 = 42;
    /// Two-sided z-score threshold for Monte-Carlo symmetry tests.
    pub const Z_THRESHOLD: f64 = 4.0;
    /// Default inner-path count for nested Monte-Carlo valuations.
    pub const INNER_PATHS: usize = 20_000;
}
