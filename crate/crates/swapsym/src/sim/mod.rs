//! Monte-Carlo engine: exact-transition path simulation, payoff evaluation,
//! and paired distributional symmetry tests.

pub mod engine;
pub mod estimate;
pub mod pathset;
pub mod payoff;

pub use engine::{
    simulate_paths, simulate_paths_with, time_changed_terminals,
    time_changed_terminals_with, TimeChangeSpec,
};
pub use estimate::{
    estimate_payoff, mc_symmetry_test, mc_symmetry_test_time_changed, mc_symmetry_test_with,
    numeraire_reweight, SwapTestSpec, SymmetryZReport, ZEntry,
};
pub use pathset::{PathSet, TimeChangedTerminals, MAX_STORED_VALUES};
pub use payoff::PayoffSpec;
