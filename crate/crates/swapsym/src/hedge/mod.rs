//! Semi-static hedging of barrier contracts on an asset pair.
//!
//! A barrier contract activates or dies at the first monitoring date where
//! `scale * S_1 <= S_2`. When the model law is invariant under the matching
//! pair symmetry, the contract is replicated by holding European claims and
//! trading at most once, at the first breach: the original claim and its
//! barrier-reflected counterpart have equal value on the barrier, so the
//! exchange is self-financing there. [`contract`] builds the claims,
//! [`value`] marks them (closed form or nested simulation), and
//! [`backtest`] measures the replication error path by path.

pub mod backtest;
pub mod contract;
pub mod value;

pub use backtest::{
    barrier_value_identity, convergence_study, run_backtest, run_backtest_with, write_pnl_csv,
    BacktestConfig, BacktestReport, ConvergenceRow, ValueIdentityReport, MAX_NESTED_DRAWS,
};
pub use contract::{
    build_hedge, BarrierContract, BarrierKind, BarrierPayoffKind, HedgePortfolio,
};
pub use value::{closed_form_value, nested_value, ValuationMode};
